#include "qc/eval.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "qc/canonical.hpp"
#include "qc/data.hpp"
#include "qc/errors.hpp"
#include "qc/rng.hpp"

namespace qc {

ConfusionMatrix ConfusionMatrix::zero(int num_classes) {
  if (num_classes < 1)
    throw InvalidInputError("ConfusionMatrix: need at least one class");
  ConfusionMatrix cm;
  cm.counts.setZero(num_classes, num_classes);
  return cm;
}

void ConfusionMatrix::add(const ConfusionMatrix& other) {
  if (other.counts.rows() != counts.rows())
    throw InvalidInputError("ConfusionMatrix::add: size mismatch");
  counts += other.counts;
}

ConfusionMatrix confusion(const std::vector<int>& predicted,
                          const std::vector<int>& truth, int num_classes) {
  if (predicted.size() != truth.size())
    throw InvalidInputError("confusion: prediction/label count mismatch");
  ConfusionMatrix cm = ConfusionMatrix::zero(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
      throw InvalidInputError("confusion: class id out of range");
    ++cm.counts(t, p);
  }
  return cm;
}

double macc(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int present = 0;
  for (Eigen::Index c = 0; c < cm.counts.rows(); ++c) {
    const std::int64_t row = cm.counts.row(c).sum();
    if (row == 0) continue;  // class absent from ground truth
    sum += static_cast<double>(cm.counts(c, c)) / static_cast<double>(row);
    ++present;
  }
  return present == 0 ? 0.0 : sum / present;
}

double miou(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int present = 0;
  for (Eigen::Index c = 0; c < cm.counts.rows(); ++c) {
    const std::int64_t tp = cm.counts(c, c);
    const std::int64_t row = cm.counts.row(c).sum();
    const std::int64_t col = cm.counts.col(c).sum();
    const std::int64_t denom = row + col - tp;  // TP+FP+FN
    if (denom == 0) continue;  // class absent from truth and predictions
    sum += static_cast<double>(tp) / static_cast<double>(denom);
    ++present;
  }
  return present == 0 ? 0.0 : sum / present;
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kFlipX:
      return "x";
    case TransformKind::kFlipY:
      return "y";
    case TransformKind::kFlipZ:
      return "z";
    case TransformKind::kFlipXYZ:
      return "xyz";
    case TransformKind::kPlane:
      return "plane";
  }
  throw UsageError("to_string: unknown transform");
}

namespace {

PointCloud apply_transform_kind(const PointCloud& cloud, TransformKind kind,
                                const Eigen::Vector3d& plane_normal) {
  switch (kind) {
    case TransformKind::kFlipX:
      return reflect(cloud, Axis::kX);
    case TransformKind::kFlipY:
      return reflect(cloud, Axis::kY);
    case TransformKind::kFlipZ:
      return reflect(cloud, Axis::kZ);
    case TransformKind::kFlipXYZ:
      return reflect(cloud, Axis::kXYZ);
    case TransformKind::kPlane:
      return reflect(cloud, plane_normal);
  }
  throw UsageError("apply_transform_kind: unknown transform");
}

double relative_drop(double base, double transformed) {
  if (base == 0.0) return 0.0;
  return (base - transformed) / base * 100.0;
}

}  // namespace

InvarianceReport invariance_report(const SegModel& model,
                                   const std::vector<PointCloud>& dataset,
                                   const std::vector<TransformKind>& transforms,
                                   int n_trials, std::uint64_t seed) {
  if (dataset.empty())
    throw InvalidInputError("invariance_report: empty dataset");
  if (n_trials < 1)
    throw InvalidInputError("invariance_report: need at least one trial");
  for (const PointCloud& cloud : dataset)
    if (!cloud.has_labels())
      throw InvalidInputError("invariance_report: clouds need labels");

  InvarianceReport report;

  // Exclusion is decided on the baseline cloud; reflections preserve the
  // eigenvalue spectrum, so the transformed copy would be degenerate too.
  std::vector<const PointCloud*> clouds;
  for (const PointCloud& cloud : dataset) {
    if (model.canonicalize_input && canonicalize(cloud).degenerate) {
      ++report.excluded_degenerate;
      continue;
    }
    clouds.push_back(&cloud);
  }
  if (clouds.empty())
    throw InvalidInputError(
        "invariance_report: every cloud was excluded as degenerate");

  std::vector<Eigen::MatrixXd> base_logits;
  base_logits.reserve(clouds.size());
  ConfusionMatrix cm_base = ConfusionMatrix::zero(model.num_classes);
  for (const PointCloud* cloud : clouds) {
    Eigen::MatrixXd logits = forward(model, *cloud);
    std::vector<int> preds(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      int best = 0;
      for (int c = 1; c < logits.cols(); ++c)
        if (logits(i, c) > logits(i, best)) best = c;
      preds[static_cast<std::size_t>(i)] = best;
    }
    cm_base.add(confusion(preds, cloud->labels, model.num_classes));
    base_logits.push_back(std::move(logits));
  }
  report.macc_base = macc(cm_base);
  report.miou_base = miou(cm_base);

  for (TransformKind kind : transforms) {
    const int trials = kind == TransformKind::kPlane ? n_trials : 1;
    TransformSummary summary;
    summary.transform = kind;
    summary.trials = trials;
    std::vector<double> dmaccs, dmious;

    for (int trial = 0; trial < trials; ++trial) {
      Eigen::Vector3d normal = Eigen::Vector3d::UnitX();
      if (kind == TransformKind::kPlane) {
        Rng rng(mix_seed(seed, 0x706c616e65ULL + static_cast<std::uint64_t>(trial)));
        normal = rng.unit_vector();
      }

      ConfusionMatrix cm_t = ConfusionMatrix::zero(model.num_classes);
      for (std::size_t i = 0; i < clouds.size(); ++i) {
        const PointCloud transformed =
            apply_transform_kind(*clouds[i], kind, normal);
        const Eigen::MatrixXd logits = forward(model, transformed);
        summary.max_logit_diff =
            std::max(summary.max_logit_diff,
                     (logits - base_logits[i]).cwiseAbs().maxCoeff());
        std::vector<int> preds(static_cast<std::size_t>(logits.rows()));
        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
          int best = 0;
          for (int c = 1; c < logits.cols(); ++c)
            if (logits(r, c) > logits(r, best)) best = c;
          preds[static_cast<std::size_t>(r)] = best;
        }
        cm_t.add(confusion(preds, clouds[i]->labels, model.num_classes));
      }

      TrialRow row;
      row.transform = kind;
      row.trial = trial;
      row.macc_base = report.macc_base;
      row.miou_base = report.miou_base;
      row.macc_t = macc(cm_t);
      row.miou_t = miou(cm_t);
      row.dmacc_abs = (row.macc_base - row.macc_t) * 100.0;
      row.dmiou_abs = (row.miou_base - row.miou_t) * 100.0;
      row.dmacc_rel = relative_drop(row.macc_base, row.macc_t);
      row.dmiou_rel = relative_drop(row.miou_base, row.miou_t);
      dmaccs.push_back(row.dmacc_abs);
      dmious.push_back(row.dmiou_abs);
      report.rows.push_back(row);
    }

    auto mean = [](const std::vector<double>& xs) {
      double s = 0.0;
      for (double x : xs) s += x;
      return s / static_cast<double>(xs.size());
    };
    auto sample_std = [&](const std::vector<double>& xs, double mu) {
      if (xs.size() < 2) return 0.0;
      double s = 0.0;
      for (double x : xs) s += (x - mu) * (x - mu);
      return std::sqrt(s / static_cast<double>(xs.size() - 1));
    };
    summary.mean_dmacc_abs = mean(dmaccs);
    summary.std_dmacc_abs = sample_std(dmaccs, summary.mean_dmacc_abs);
    summary.mean_dmiou_abs = mean(dmious);
    summary.std_dmiou_abs = sample_std(dmious, summary.mean_dmiou_abs);
    report.summaries.push_back(summary);
  }
  return report;
}

void write_report_csv(const InvarianceReport& report, std::ostream& out) {
  out << "transform,trial,macc_base,macc_t,miou_base,miou_t,"
         "dmacc_abs,dmiou_abs,dmacc_rel,dmiou_rel\n";
  char buf[64];
  auto put = [&](double v, bool last) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << (last ? "\n" : ",");
  };
  for (const TrialRow& row : report.rows) {
    out << to_string(row.transform) << ',' << row.trial << ',';
    put(row.macc_base, false);
    put(row.macc_t, false);
    put(row.miou_base, false);
    put(row.miou_t, false);
    put(row.dmacc_abs, false);
    put(row.dmiou_abs, false);
    put(row.dmacc_rel, false);
    put(row.dmiou_rel, true);
  }
}

}  // namespace qc
