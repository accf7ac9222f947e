#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "ofp/classify.hpp"
#include "ofp/rng.hpp"
#include "ofp/synth.hpp"

using namespace ofp;

namespace {

FeatureMatrix make_matrix(const std::vector<std::vector<double>>& rows,
                          const std::vector<std::string>& labels) {
  FeatureMatrix m;
  m.rows = rows;
  m.labels = labels;
  m.dim = rows.empty() ? 0 : rows.front().size();
  return m;
}

/// Two Gaussian blobs per label at the given 1-D centers.
FeatureMatrix blobs(const std::vector<std::pair<std::string, double>>& centers, int per_class,
                    double sigma, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m;
  m.dim = 1;
  for (const auto& [label, mu] : centers)
    for (int i = 0; i < per_class; ++i) {
      m.rows.push_back({mu + sigma * rng.normal()});
      m.labels.push_back(label);
    }
  return m;
}

}  // namespace

TEST_CASE("normalizer gives zero mean and unit variance on its training set") {
  Rng rng(1);
  FeatureMatrix m;
  m.dim = 3;
  for (int i = 0; i < 100; ++i) {
    m.rows.push_back({rng.uniform(3.0, 9.0), rng.normal() * 50.0, 1e-9 * rng.uniform(0.5, 2.0)});
    m.labels.push_back(i % 2 ? "a" : "b");
  }
  const Normalizer nm = fit_normalizer(m);
  const FeatureMatrix z = nm.apply(m);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0, var = 0.0;
    for (const auto& r : z.rows) mean += r[j];
    mean /= static_cast<double>(z.size());
    for (const auto& r : z.rows) var += (r[j] - mean) * (r[j] - mean);
    var /= static_cast<double>(z.size());
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }
  // a probe equal to the training mean maps to the origin
  const auto zero = nm.apply(nm.mean);
  for (double v : zero) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("normalizer flags degenerate dimensions and maps them to zero") {
  const auto m = make_matrix({{1.0, 7.0}, {1.0, 7.0}, {1.0, 7.0}}, {"a", "a", "b"});
  const Normalizer nm = fit_normalizer(m);
  CHECK(nm.degenerate[0]);
  CHECK(nm.degenerate[1]);
  for (const auto& r : nm.apply(m).rows) {
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
  }
  FeatureMatrix empty;
  CHECK_THROWS_AS(fit_normalizer(empty), std::invalid_argument);
}

TEST_CASE("stratified split: 600 balanced samples at 0.5 give 75 per class per side") {
  std::vector<std::string> labels;
  for (int d = 0; d < 4; ++d)
    for (int i = 0; i < 150; ++i) labels.push_back("LED-0" + std::to_string(d + 1));
  const auto [train, test] = split_indices(labels, 0.5, 42);
  CHECK(train.size() == 300);
  CHECK(test.size() == 300);
  std::map<std::string, int> tc, sc;
  for (auto i : train) ++tc[labels[i]];
  for (auto i : test) ++sc[labels[i]];
  for (const auto& [id, n] : tc) CHECK(n == 75);
  for (const auto& [id, n] : sc) CHECK(n == 75);

  // union restores the original index multiset
  std::vector<std::size_t> all(train);
  all.insert(all.end(), test.begin(), test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);

  const auto [t2, s2] = split_indices(labels, 0.5, 42);
  CHECK(t2 == train);
  CHECK(s2 == test);
}

TEST_CASE("stratified split edge cases") {
  const std::vector<std::string> two{"a", "a", "b", "b"};
  const auto [tr, te] = split_indices(two, 0.5, 1);
  CHECK(tr.size() == 2);
  CHECK(te.size() == 2);

  CHECK_THROWS_AS(split_indices({"a", "b", "b"}, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_indices(two, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_indices(two, 1.0, 1), std::invalid_argument);
}

TEST_CASE("fine tree separates 1-D classes with a single split") {
  const auto m = blobs({{"a", 0.0}, {"b", 10.0}}, 20, 0.5, 3);
  const ClassifierModel tree = train_classifier(ClassifierKind::FineTree, m);
  CHECK(tree.tree.nodes.size() == 3);  // root + two leaves
  CHECK(evaluate(tree, m).accuracy == 1.0);
}

TEST_CASE("fine knn memorizes its training set and scores exact hits 1.0") {
  const auto m = blobs({{"a", 0.0}, {"b", 4.0}, {"c", 8.0}}, 15, 0.3, 5);
  const ClassifierModel knn = train_classifier(ClassifierKind::FineKnn, m);
  CHECK(evaluate(knn, m).accuracy == 1.0);
  const Prediction p = predict(knn, m.rows[7]);
  CHECK(p.label == m.labels[7]);
  CHECK(p.score == 1.0);
}

TEST_CASE("fine knn breaks exact ties toward the smaller device id") {
  const auto m = make_matrix({{0.0}, {2.0}}, {"zeta-dev", "alpha-dev"});
  const ClassifierModel knn = train_classifier(ClassifierKind::FineKnn, m);
  CHECK(predict(knn, {1.0}).label == "alpha-dev");  // equidistant
}

TEST_CASE("fine knn predictions ignore training row order") {
  auto m = blobs({{"a", 0.0}, {"b", 3.0}}, 25, 1.0, 9);
  const ClassifierModel knn1 = train_classifier(ClassifierKind::FineKnn, m);
  // reverse the rows
  std::reverse(m.rows.begin(), m.rows.end());
  std::reverse(m.labels.begin(), m.labels.end());
  const ClassifierModel knn2 = train_classifier(ClassifierKind::FineKnn, m);
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> probe{rng.uniform(-2.0, 5.0)};
    CHECK(predict(knn1, probe).label == predict(knn2, probe).label);
  }
}

TEST_CASE("gaussian naive bayes approaches the Bayes rate on well-separated classes") {
  const auto train = blobs({{"a", -3.0}, {"b", 3.0}}, 200, 1.0, 21);
  const auto test = blobs({{"a", -3.0}, {"b", 3.0}}, 400, 1.0, 22);
  const ClassifierModel nb = train_classifier(ClassifierKind::GaussianNB, train);
  CHECK(evaluate(nb, test).accuracy > 0.99);
  // posterior behaves like a probability
  const Prediction mid = predict(nb, {0.0});
  CHECK(mid.score > 0.4);
  CHECK(mid.score < 0.6);
  const Prediction far = predict(nb, {-3.0});
  CHECK(far.label == "a");
  CHECK(far.score > 0.99);
  CHECK(far.score <= 1.0);
}

TEST_CASE("bagged trees are deterministic given the hyper seed") {
  const auto m = blobs({{"a", 0.0}, {"b", 2.0}}, 40, 0.7, 33);
  TrainHyper hyper;
  hyper.seed = 77;
  const ClassifierModel b1 = train_classifier(ClassifierKind::BaggedTrees, m, hyper);
  const ClassifierModel b2 = train_classifier(ClassifierKind::BaggedTrees, m, hyper);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> probe{rng.uniform(-1.0, 3.0)};
    const Prediction p1 = predict(b1, probe);
    const Prediction p2 = predict(b2, probe);
    CHECK(p1.label == p2.label);
    CHECK(p1.score == p2.score);
  }
  CHECK(evaluate(b1, m).accuracy > 0.9);
}

TEST_CASE("evaluate builds a consistent confusion matrix") {
  const auto train = blobs({{"a", 0.0}, {"b", 5.0}}, 30, 0.4, 11);
  const auto test = blobs({{"a", 0.0}, {"b", 5.0}}, 21, 0.4, 12);
  const ClassifierModel knn = train_classifier(ClassifierKind::FineKnn, train);
  const Metrics m = evaluate(knn, test);
  int total = 0, trace = 0;
  std::map<std::string, int> row_sums;
  for (std::size_t i = 0; i < m.classes.size(); ++i)
    for (std::size_t j = 0; j < m.classes.size(); ++j) {
      total += m.confusion[i][j];
      if (i == j) trace += m.confusion[i][j];
      row_sums[m.classes[i]] += m.confusion[i][j];
    }
  CHECK(total == 42);
  CHECK(row_sums["a"] == 21);
  CHECK(row_sums["b"] == 21);
  CHECK(m.accuracy == doctest::Approx(static_cast<double>(trace) / total));
}

TEST_CASE("accuracy is invariant under a consistent relabeling") {
  const auto train = blobs({{"a", 0.0}, {"b", 5.0}}, 30, 1.2, 13);
  auto train2 = train;
  for (auto& l : train2.labels) l = (l == "a") ? "x" : "y";
  const auto test = blobs({{"a", 0.0}, {"b", 5.0}}, 40, 1.2, 14);
  auto test2 = test;
  for (auto& l : test2.labels) l = (l == "a") ? "x" : "y";
  const auto m1 = evaluate(train_classifier(ClassifierKind::FineTree, train), test);
  const auto m2 = evaluate(train_classifier(ClassifierKind::FineTree, train2), test2);
  CHECK(m1.accuracy == m2.accuracy);
}

TEST_CASE("prediction rejects dimension mismatches and single-class training fails") {
  const auto m = blobs({{"a", 0.0}, {"b", 5.0}}, 10, 0.4, 15);
  const ClassifierModel knn = train_classifier(ClassifierKind::FineKnn, m);
  CHECK_THROWS_AS(predict(knn, {1.0, 2.0}), std::invalid_argument);

  const auto single = blobs({{"a", 0.0}}, 10, 0.4, 16);
  CHECK_THROWS_AS(train_classifier(ClassifierKind::FineTree, single), std::invalid_argument);
}

TEST_CASE("raw S21 features are per-point magnitudes in dB") {
  const FrequencyGrid g = FrequencyGrid::log_spaced(1e5, 1e8, 750);
  S21Sweep sw;
  sw.grid = g;
  sw.values.assign(750, {1.0, 0.0});
  const auto flat = raw_s21_features(sw);
  REQUIRE(flat.size() == 750);
  for (double v : flat) CHECK(v == doctest::Approx(0.0));

  const auto real = sweep_response(CircuitParams::nominal(), {2.0}, g);
  const auto base = raw_s21_features(real);
  auto scaled_sweep = real;
  for (auto& v : scaled_sweep.values) v *= 10.0;
  const auto scaled = raw_s21_features(scaled_sweep);
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(scaled[i] - base[i] == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("fisher ratio: identical classes, the exact 2.0 case, and the +inf sentinel") {
  // identical distributions
  const auto same = make_matrix({{1.0}, {3.0}, {1.0}, {3.0}}, {"a", "a", "b", "b"});
  CHECK(fisher_ratio(same, 0) == 0.0);

  // means +-1, population variance 1: (2)^2 / (1+1) = 2
  const auto two = make_matrix({{0.0}, {2.0}, {-2.0}, {0.0}}, {"a", "a", "b", "b"});
  CHECK(fisher_ratio(two, 0) == doctest::Approx(2.0));

  // separated point classes: zero within-class variance
  const auto points = make_matrix({{0.0}, {0.0}, {1.0}, {1.0}}, {"a", "a", "b", "b"});
  CHECK(std::isinf(fisher_ratio(points, 0)));

  CHECK_THROWS_AS(fisher_ratio(make_matrix({{0.0}}, {"a"}), 0), std::invalid_argument);
}
