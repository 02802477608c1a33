#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "actune/config_space.hpp"
#include "actune/run_result.hpp"

namespace actune {

struct InstanceSeedPair {
  std::string instance;
  uint64_t seed = 0;
  bool operator==(const InstanceSeedPair&) const = default;
  bool operator<(const InstanceSeedPair& o) const {
    return instance != o.instance ? instance < o.instance : seed < o.seed;
  }
};

// configurations x (instance, seed) table of per-run costs. All cells are
// produced with the scenario's fixed cutoff, never an adapted one.
class CostMatrix {
 public:
  Metric metric = Metric::RuntimePar10;
  double kappa_max = 0.0;

  CostMatrix() = default;
  CostMatrix(Metric m, double kmax) : metric(m), kappa_max(kmax) {}

  size_t add_config(const Configuration& c) {
    configs_.push_back(c);
    costs_.emplace_back(columns_.size(), 0.0);
    statuses_.emplace_back(columns_.size(), RunStatus::Abort);
    return configs_.size() - 1;
  }

  size_t add_column(const InstanceSeedPair& col) {
    columns_.push_back(col);
    for (auto& row : costs_) row.push_back(0.0);
    for (auto& row : statuses_) row.push_back(RunStatus::Abort);
    return columns_.size() - 1;
  }

  void set(size_t row, size_t col, RunStatus status, double cost) {
    costs_.at(row).at(col) = cost;
    statuses_.at(row).at(col) = status;
  }

  double cost(size_t row, size_t col) const { return costs_.at(row).at(col); }
  RunStatus status(size_t row, size_t col) const { return statuses_.at(row).at(col); }

  const std::vector<Configuration>& configs() const { return configs_; }
  const std::vector<InstanceSeedPair>& columns() const { return columns_; }
  size_t rows() const { return configs_.size(); }
  size_t cols() const { return columns_.size(); }

  int find_config(const Configuration& c) const {
    uint64_t id = c.id();
    for (size_t i = 0; i < configs_.size(); ++i)
      if (configs_[i].id() == id) return static_cast<int>(i);
    return -1;
  }

  // Metric aggregate of one row; cells keep their recorded status so
  // penalties are re-derived from kappa_max, not from stored cost values.
  double row_aggregate(size_t row, double worst_quality = 0.0) const {
    if (cols() == 0) throw Error("empty cost matrix row");
    double sum = 0.0;
    for (size_t j = 0; j < cols(); ++j) {
      RunStatus st = statuses_[row][j];
      sum += st == RunStatus::Success ? costs_[row][j]
                                      : failure_cost(metric, kappa_max, worst_quality);
    }
    return sum / static_cast<double>(cols());
  }

  std::string to_csv() const {
    std::string out = "config_id,instance,seed,status,cost\n";
    for (size_t i = 0; i < rows(); ++i) {
      const std::string id = configs_[i].id_hex();
      for (size_t j = 0; j < cols(); ++j) {
        out += id;
        out += ',';
        out += csv_quote(columns_[j].instance);
        out += ',';
        out += std::to_string(columns_[j].seed);
        out += ',';
        out += to_string(statuses_[i][j]);
        out += ',';
        out += fmt_fixed(costs_[i][j]);
        out += '\n';
      }
    }
    return out;
  }

 private:
  std::vector<Configuration> configs_;
  std::vector<InstanceSeedPair> columns_;
  std::vector<std::vector<double>> costs_;
  std::vector<std::vector<RunStatus>> statuses_;
};

}  // namespace actune
