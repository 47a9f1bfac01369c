#include "tnet/metrics.hpp"

#include <cstdio>
#include <ostream>

#include "tnet/errors.hpp"

namespace tnet {

MetricsReport compute_metrics(const std::vector<int>& y_true,
                              const std::vector<int>& y_pred,
                              const std::vector<std::string>& classes,
                              const std::vector<Group>& groups) {
  if (y_true.empty()) throw ContractViolation("compute_metrics: empty input");
  if (y_true.size() != y_pred.size()) {
    throw ContractViolation("compute_metrics: length mismatch");
  }
  if (classes.empty() || classes.size() != groups.size()) {
    throw ContractViolation("compute_metrics: bad class/group lists");
  }
  const int c = static_cast<int>(classes.size());

  MetricsReport r;
  r.classes = classes;
  r.groups = groups;
  r.confusion = Eigen::MatrixXi::Zero(c, c);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= c || p < 0 || p >= c) {
      throw ContractViolation("compute_metrics: label outside class list");
    }
    r.confusion(t, p) += 1;
  }

  r.precision.resize(static_cast<std::size_t>(c));
  r.recall.resize(static_cast<std::size_t>(c));
  r.f1.resize(static_cast<std::size_t>(c));
  double recall_sum = 0.0;
  int n_base = 0, n_few = 0;
  for (int k = 0; k < c; ++k) {
    const double tp = r.confusion(k, k);
    const double fp = r.confusion.col(k).sum() - tp;
    const double fn = r.confusion.row(k).sum() - tp;
    const double prec = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    const double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    r.precision[static_cast<std::size_t>(k)] = prec;
    r.recall[static_cast<std::size_t>(k)] = rec;
    r.f1[static_cast<std::size_t>(k)] = f1;
    recall_sum += rec;
    if (groups[static_cast<std::size_t>(k)] == Group::base) {
      r.precision_base += prec;
      r.recall_base += rec;
      r.f1_base += f1;
      ++n_base;
    } else {
      r.precision_few += prec;
      r.recall_few += rec;
      r.f1_few += f1;
      ++n_few;
    }
  }
  if (n_base > 0) {
    r.precision_base /= n_base;
    r.recall_base /= n_base;
    r.f1_base /= n_base;
  }
  if (n_few > 0) {
    r.precision_few /= n_few;
    r.recall_few /= n_few;
    r.f1_few /= n_few;
  }
  r.balanced_accuracy = recall_sum / c;
  return r;
}

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}
}  // namespace

void write_report_text(const MetricsReport& r, std::ostream& out) {
  out << "experiment: " << r.experiment_id << "  model: " << r.model_name
      << "  seed: " << r.seed << "\n\n";
  out << "class            group     precision  recall     f1\n";
  for (std::size_t k = 0; k < r.classes.size(); ++k) {
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %-9s %-10s %-10s %-10s\n",
                  r.classes[k].c_str(),
                  to_string(r.groups[k]).c_str(), fmt(r.precision[k]).c_str(),
                  fmt(r.recall[k]).c_str(), fmt(r.f1[k]).c_str());
    out << line;
  }
  out << "\n";
  out << "precision(B) " << fmt(r.precision_base) << "  recall(B) "
      << fmt(r.recall_base) << "  f1(B) " << fmt(r.f1_base) << "\n";
  out << "precision(F) " << fmt(r.precision_few) << "  recall(F) "
      << fmt(r.recall_few) << "  f1(F) " << fmt(r.f1_few) << "\n";
  out << "balanced accuracy " << fmt(r.balanced_accuracy) << "\n\n";
  out << "confusion matrix (rows = true, cols = predicted):\n";
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) {
      char cell[16];
      std::snprintf(cell, sizeof cell, "%6d", r.confusion(i, j));
      out << cell;
    }
    out << "\n";
  }
  if (!r.config_snapshot.empty()) {
    out << "\nconfig:\n";
    for (const auto& [k, v] : r.config_snapshot) {
      out << "  " << k << " = " << v << "\n";
    }
  }
}

void write_report_records(const MetricsReport& r, std::ostream& out) {
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "experiment\t" << r.experiment_id << "\n";
  out << "model\t" << r.model_name << "\n";
  out << "seed\t" << r.seed << "\n";
  for (std::size_t k = 0; k < r.classes.size(); ++k) {
    out << "class\t" << r.classes[k] << "\t" << to_string(r.groups[k]) << "\t"
        << num(r.precision[k]) << "\t" << num(r.recall[k]) << "\t"
        << num(r.f1[k]) << "\n";
  }
  out << "group_base\t" << num(r.precision_base) << "\t" << num(r.recall_base)
      << "\t" << num(r.f1_base) << "\n";
  out << "group_few_shot\t" << num(r.precision_few) << "\t" << num(r.recall_few)
      << "\t" << num(r.f1_few) << "\n";
  out << "balanced_accuracy\t" << num(r.balanced_accuracy) << "\n";
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    out << "confusion_row\t" << r.classes[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) {
      out << "\t" << r.confusion(i, j);
    }
    out << "\n";
  }
  for (const auto& [k, v] : r.config_snapshot) {
    out << "config\t" << k << "\t" << v << "\n";
  }
}

}  // namespace tnet
