#include <cstdint>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "qc/eval.hpp"
#include "qc/rng.hpp"

using namespace qc;

namespace {

// Brute-force recomputation straight from the label pairs.
double macc_oracle(const std::vector<int>& pred, const std::vector<int>& truth,
                   int num_classes) {
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    std::int64_t tp = 0, count = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] != c) continue;
      ++count;
      if (pred[i] == c) ++tp;
    }
    if (count == 0) continue;
    ++present;
    sum += static_cast<double>(tp) / static_cast<double>(count);
  }
  return present == 0 ? 0.0 : sum / present;
}

double miou_oracle(const std::vector<int>& pred, const std::vector<int>& truth,
                   int num_classes) {
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == c;
      const bool p = pred[i] == c;
      if (t && p) ++tp;
      if (!t && p) ++fp;
      if (t && !p) ++fn;
    }
    if (tp + fp + fn == 0) continue;
    ++present;
    sum += static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
  }
  return present == 0 ? 0.0 : sum / present;
}

PointCloud random_cloud(std::uint64_t seed, Eigen::Index n, int classes) {
  Rng rng(seed);
  PointCloud cloud;
  cloud.positions.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    cloud.positions(i, 0) = rng.uniform(-3, 3);
    cloud.positions(i, 1) = rng.uniform(-1.5, 1.5);
    cloud.positions(i, 2) = rng.uniform(-0.5, 0.5);
  }
  for (Eigen::Index i = 0; i < n; ++i)
    cloud.labels.push_back(
        static_cast<int>(rng.integer(static_cast<std::uint64_t>(classes))));
  return cloud;
}

SegModel strict_model(bool canonicalize, std::uint64_t seed) {
  SegModelConfig config;
  config.encoder_widths = {4, 6};
  config.head_widths = {4};
  config.num_classes = 3;
  config.kinds = {NeuronKind::kQuadraticStrict, NeuronKind::kConventional,
                  NeuronKind::kConventional, NeuronKind::kConventional};
  config.canonicalize_input = canonicalize;
  config.seed = seed;
  return make_model(config);
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("confusion counts land where they should") {
    const std::vector<int> truth{0, 0, 1, 2, 2, 2};
    const ConfusionMatrix perfect = confusion(truth, truth, 3);
    CHECK(perfect.counts(0, 0) == 2);
    CHECK(perfect.counts(1, 1) == 1);
    CHECK(perfect.counts(2, 2) == 3);
    CHECK(perfect.total() == 6);
    CHECK(perfect.counts.sum() == perfect.counts.diagonal().sum());

    const std::vector<int> all_zero{0, 0, 0, 0, 0, 0};
    const ConfusionMatrix column = confusion(all_zero, truth, 3);
    CHECK(column.counts.col(0).sum() == 6);
    CHECK(column.counts(0, 0) == 2);
    CHECK(column.counts(1, 0) == 1);
    CHECK(column.counts(2, 0) == 3);

    CHECK_THROWS_AS(confusion({0}, {0, 1}, 3), InvalidInputError);
    CHECK_THROWS_AS(confusion({3}, {0}, 3), InvalidInputError);
    CHECK_THROWS_AS(confusion({0}, {-1}, 3), InvalidInputError);
  }

  TEST_CASE("confusion tallies match a hand count") {
    Rng rng(101);
    ConfusionMatrix cm = ConfusionMatrix::zero(4);
    std::vector<std::vector<int>> tally(4, std::vector<int>(4, 0));
    std::vector<int> pred, truth;
    for (int i = 0; i < 500; ++i) {
      const int p = static_cast<int>(rng.integer(4));
      const int t = static_cast<int>(rng.integer(4));
      pred.push_back(p);
      truth.push_back(t);
      ++tally[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    cm.add(confusion(pred, truth, 4));
    for (int t = 0; t < 4; ++t)
      for (int p = 0; p < 4; ++p)
        CHECK(cm.counts(t, p) == tally[static_cast<std::size_t>(t)]
                                      [static_cast<std::size_t>(p)]);
  }

  TEST_CASE("metric worked examples") {
    ConfusionMatrix cm = ConfusionMatrix::zero(2);
    cm.counts << 3, 1, 2, 2;
    // recalls 3/4 and 2/4; intersections 3/(3+2+1) and 2/(2+1+2)
    CHECK(macc(cm) == 0.625);
    CHECK(miou(cm) == (3.0 / 6.0 + 2.0 / 5.0) / 2.0);

    ConfusionMatrix diag = ConfusionMatrix::zero(3);
    diag.counts.diagonal() << 5, 1, 7;
    CHECK(macc(diag) == 1.0);
    CHECK(miou(diag) == 1.0);
  }

  TEST_CASE("absent classes are skipped, misfired ones are not") {
    // class 2 never appears in truth or predictions: skipped by both metrics
    ConfusionMatrix cm = ConfusionMatrix::zero(3);
    cm.counts(0, 0) = 4;
    cm.counts(1, 1) = 4;
    CHECK(macc(cm) == 1.0);
    CHECK(miou(cm) == 1.0);

    // class 2 shows up only as a wrong prediction: miou counts the zero,
    // macc (a recall average) still skips it
    cm.counts(0, 2) = 2;
    CHECK(macc(cm) == (4.0 / 6.0 + 1.0) / 2.0);
    CHECK(miou(cm) == (4.0 / 6.0 + 1.0 + 0.0) / 3.0);

    const ConfusionMatrix empty = ConfusionMatrix::zero(3);
    CHECK(macc(empty) == 0.0);
    CHECK(miou(empty) == 0.0);
  }

  TEST_CASE("metrics agree with brute force on random data") {
    Rng rng(103);
    for (int trial = 0; trial < 100; ++trial) {
      const int classes = 2 + static_cast<int>(rng.integer(5));
      const int n = 1 + static_cast<int>(rng.integer(200));
      std::vector<int> pred, truth;
      for (int i = 0; i < n; ++i) {
        pred.push_back(static_cast<int>(
            rng.integer(static_cast<std::uint64_t>(classes))));
        truth.push_back(static_cast<int>(
            rng.integer(static_cast<std::uint64_t>(classes))));
      }
      const ConfusionMatrix cm = confusion(pred, truth, classes);
      CHECK(macc(cm) == macc_oracle(pred, truth, classes));
      CHECK(miou(cm) == miou_oracle(pred, truth, classes));
    }
  }

  TEST_CASE("axis rows of the report are exactly zero for a strict model") {
    const SegModel model = strict_model(false, 111);
    std::vector<PointCloud> data;
    for (int i = 0; i < 3; ++i)
      data.push_back(random_cloud(120 + static_cast<std::uint64_t>(i), 64, 3));

    const InvarianceReport report = invariance_report(
        model, data,
        {TransformKind::kFlipX, TransformKind::kFlipY, TransformKind::kFlipZ,
         TransformKind::kFlipXYZ},
        1, 7);
    CHECK(report.rows.size() == 4);
    CHECK(report.summaries.size() == 4);
    CHECK(report.excluded_degenerate == 0);
    for (const TrialRow& row : report.rows) {
      CHECK(row.macc_t == row.macc_base);
      CHECK(row.miou_t == row.miou_base);
      CHECK(row.dmacc_abs == 0.0);
      CHECK(row.dmacc_rel == 0.0);
    }
    for (const TransformSummary& s : report.summaries) {
      CHECK(s.max_logit_diff == 0.0);
      CHECK(s.mean_dmacc_abs == 0.0);
      CHECK(s.std_dmacc_abs == 0.0);
    }
  }

  TEST_CASE("plane trials and degenerate exclusion") {
    const SegModel model = strict_model(true, 113);
    std::vector<PointCloud> data;
    for (int i = 0; i < 3; ++i) {
      PointCloud cloud = random_cloud(130 + static_cast<std::uint64_t>(i), 48, 3);
      cloud.positions.col(0) *= 3.0;  // spread the spectrum
      data.push_back(cloud);
    }
    // a perfect cube of corners has a three-way degenerate spectrum
    PointCloud cube;
    cube.positions.resize(8, 3);
    int r = 0;
    for (int sx : {-1, 1})
      for (int sy : {-1, 1})
        for (int sz : {-1, 1}) {
          cube.positions.row(r) = Eigen::RowVector3d(sx, sy, sz);
          cube.labels.push_back(r % 3);
          ++r;
        }
    data.push_back(cube);

    const InvarianceReport report =
        invariance_report(model, data, {TransformKind::kPlane}, 4, 99);
    CHECK(report.excluded_degenerate == 1);
    CHECK(report.rows.size() == 4);
    for (const TrialRow& row : report.rows) {
      CHECK(row.trial >= 0);
      CHECK(row.transform == TransformKind::kPlane);
      CHECK(row.dmacc_abs == 0.0);  // canonicalized strict model
      CHECK(row.dmiou_abs == 0.0);
    }
    CHECK(report.summaries.size() == 1);
    CHECK(report.summaries[0].trials == 4);
    CHECK(report.summaries[0].max_logit_diff <= 1e-8);

    const InvarianceReport again =
        invariance_report(model, data, {TransformKind::kPlane}, 4, 99);
    std::stringstream x, y;
    write_report_csv(report, x);
    write_report_csv(again, y);
    CHECK(x.str() == y.str());
  }

  TEST_CASE("report csv has the documented shape") {
    const SegModel model = strict_model(false, 117);
    std::vector<PointCloud> data{random_cloud(140, 32, 3)};
    const InvarianceReport report = invariance_report(
        model, data, {TransformKind::kFlipX, TransformKind::kPlane}, 3, 5);

    std::stringstream out;
    write_report_csv(report, out);
    std::string line;
    std::getline(out, line);
    CHECK(line ==
          "transform,trial,macc_base,macc_t,miou_base,miou_t,"
          "dmacc_abs,dmiou_abs,dmacc_rel,dmiou_rel");
    int rows = 0;
    while (std::getline(out, line)) {
      if (line.empty()) continue;
      ++rows;
      CHECK((line.rfind("x,", 0) == 0 || line.rfind("plane,", 0) == 0));
    }
    CHECK(rows == 1 + 3);  // one axis row, three plane trials

    CHECK(to_string(TransformKind::kFlipXYZ) == "xyz");
    CHECK_THROWS_AS(
        invariance_report(model, data, {TransformKind::kPlane}, 0, 5),
        InvalidInputError);
  }
}
