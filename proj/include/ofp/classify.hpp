#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ofp/circuit.hpp"

namespace ofp {

/// Feature rows with aligned device labels. dim is 3 for fingerprint
/// features and the grid length for raw S21 features, but any width works.
struct FeatureMatrix {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::size_t dim = 0;

  std::size_t size() const { return rows.size(); }
  void require_valid() const;
};

/// z-score transform fitted on training statistics. Dimensions with zero
/// spread are flagged degenerate and pass through with std 1 (the shifted
/// output is then exactly zero on the training data).
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> degenerate;

  std::vector<double> apply(const std::vector<double>& v) const;
  FeatureMatrix apply(const FeatureMatrix& m) const;
};

enum class ClassifierKind { FineTree, FineKnn, GaussianNB, BaggedTrees };

std::string classifier_name(ClassifierKind k);
ClassifierKind classifier_from_name(const std::string& name);

struct TrainHyper {
  int max_leaves = 100;  // fine-tree and bagged base trees
  int k = 1;             // fine-knn neighbors
  int n_bagged_trees = 30;
  std::uint64_t seed = 0;  // bootstrap determinism
};

struct TreeNode {
  int feature = -1;      // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = -1;        // class index at leaves
  double purity = 1.0;   // majority fraction at leaves
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  const TreeNode& leaf_for(const std::vector<double>& x) const;
};

/// One trained classifier. State is kept flat so models serialize to the
/// database file and reload without retraining.
struct ClassifierModel {
  ClassifierKind kind = ClassifierKind::FineKnn;
  std::vector<std::string> classes;  // sorted
  std::size_t dim = 0;

  DecisionTree tree;                          // FineTree
  std::vector<std::vector<double>> knn_rows;  // FineKnn
  std::vector<int> knn_labels;
  int knn_k = 1;
  std::vector<double> nb_priors;              // GaussianNB
  std::vector<std::vector<double>> nb_means;
  std::vector<std::vector<double>> nb_vars;
  std::vector<DecisionTree> bag;              // BaggedTrees
};

struct Prediction {
  std::string label;
  double score;  // in [0, 1]
};

struct Metrics {
  double accuracy = 0.0;
  std::vector<std::string> classes;
  std::vector<std::vector<int>> confusion;  // row = true, col = predicted
};

Normalizer fit_normalizer(const FeatureMatrix& train);

/// Stratified split: per-class proportions preserved within one sample,
/// both sides keep at least one row per class. Deterministic in seed.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const std::vector<std::string>& labels, double train_fraction, std::uint64_t seed);
std::pair<FeatureMatrix, FeatureMatrix> split_dataset(const FeatureMatrix& m,
                                                      double train_fraction,
                                                      std::uint64_t seed);

ClassifierModel train_classifier(ClassifierKind kind, const FeatureMatrix& train,
                                 const TrainHyper& hyper = {});

/// Deterministic prediction; all ties break toward the lexicographically
/// smallest device id.
Prediction predict(const ClassifierModel& model, const std::vector<double>& v);

Metrics evaluate(const ClassifierModel& model, const FeatureMatrix& test);

/// Per-point magnitude in dB: the raw 750-feature baseline representation.
std::vector<double> raw_s21_features(const S21Sweep& sweep);

/// Mean over class pairs of (mu_a - mu_b)^2 / (sigma_a^2 + sigma_b^2) for
/// one feature dimension. Identical distributions give 0; separated classes
/// with zero within-class variance give +inf.
double fisher_ratio(const FeatureMatrix& m, std::size_t dim_index);

}  // namespace ofp
