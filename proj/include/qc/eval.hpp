#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qc/cloud.hpp"
#include "qc/model.hpp"

namespace qc {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;

  static ConfusionMatrix zero(int num_classes);
  int num_classes() const { return static_cast<int>(counts.rows()); }
  std::int64_t total() const { return counts.sum(); }
  void add(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(const std::vector<int>& predicted,
                          const std::vector<int>& truth, int num_classes);

// Mean per-class recall over classes with at least one true point.
double macc(const ConfusionMatrix& cm);

// Mean TP/(TP+FP+FN) over classes present in truth or predictions.
double miou(const ConfusionMatrix& cm);

enum class TransformKind { kFlipX, kFlipY, kFlipZ, kFlipXYZ, kPlane };

std::string to_string(TransformKind kind);

// Deltas follow the baseline-minus-transformed convention: positive means the
// transform hurt. Absolute deltas are percentage points, relative deltas are
// percent of the baseline value.
struct TrialRow {
  TransformKind transform;
  int trial = 0;
  double macc_base = 0, macc_t = 0;
  double miou_base = 0, miou_t = 0;
  double dmacc_abs = 0, dmiou_abs = 0;
  double dmacc_rel = 0, dmiou_rel = 0;
};

struct TransformSummary {
  TransformKind transform;
  int trials = 0;
  double mean_dmacc_abs = 0, std_dmacc_abs = 0;
  double mean_dmiou_abs = 0, std_dmiou_abs = 0;
  double max_logit_diff = 0;  // max-abs logit change across clouds and trials
};

struct InvarianceReport {
  std::vector<TrialRow> rows;
  std::vector<TransformSummary> summaries;
  int excluded_degenerate = 0;
  double macc_base = 0, miou_base = 0;
};

// Axis transforms run one trial (they are deterministic); plane transforms run
// n_trials with fresh random unit normals. When the model canonicalizes,
// clouds with a degenerate eigenbasis are excluded and counted.
InvarianceReport invariance_report(const SegModel& model,
                                   const std::vector<PointCloud>& dataset,
                                   const std::vector<TransformKind>& transforms,
                                   int n_trials, std::uint64_t seed);

// CSV columns: transform,trial,macc_base,macc_t,miou_base,miou_t,
// dmacc_abs,dmiou_abs,dmacc_rel,dmiou_rel.
void write_report_csv(const InvarianceReport& report, std::ostream& out);

}  // namespace qc
