#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tnet/dataset.hpp"

namespace tnet {

// Per-class and group-averaged precision/recall/F1 plus balanced accuracy
// for one experimental regime.
struct MetricsReport {
  std::vector<std::string> classes;
  std::vector<Group> groups;
  Eigen::MatrixXi confusion;  // row = true class, col = predicted class
  std::vector<double> precision, recall, f1;
  double precision_base = 0.0, recall_base = 0.0, f1_base = 0.0;
  double precision_few = 0.0, recall_few = 0.0, f1_few = 0.0;
  double balanced_accuracy = 0.0;

  std::string experiment_id;
  std::string model_name;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config_snapshot;
};

// precision = TP/(TP+FP), recall = TP/(TP+FN), F1 their harmonic mean; all
// 0 when undefined. Group averages are unweighted means over the group's
// classes; balanced accuracy is the unweighted mean recall over ALL classes.
MetricsReport compute_metrics(const std::vector<int>& y_true,
                              const std::vector<int>& y_pred,
                              const std::vector<std::string>& classes,
                              const std::vector<Group>& groups);

// Human-readable table, and line-delimited key\tvalue records. Both are
// deterministic functions of the report contents.
void write_report_text(const MetricsReport& r, std::ostream& out);
void write_report_records(const MetricsReport& r, std::ostream& out);

}  // namespace tnet
