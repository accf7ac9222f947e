#include "ofp/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "ofp/rng.hpp"

namespace ofp {

namespace {

std::vector<std::string> sorted_classes(const std::vector<std::string>& labels) {
  std::vector<std::string> c(labels);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

int class_index(const std::vector<std::string>& classes, const std::string& label) {
  auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label) return -1;
  return static_cast<int>(it - classes.begin());
}

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    g -= p * p;
  }
  return g;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best Gini split over all features for the rows in `idx`. Features are
// scanned in ascending order and only strictly better gains replace the
// incumbent, so equal-gain ties resolve to the lowest feature index and
// lowest threshold independent of row order.
SplitChoice best_split(const FeatureMatrix& m, const std::vector<int>& labels,
                       const std::vector<std::size_t>& idx, int n_classes) {
  SplitChoice best;
  const int total = static_cast<int>(idx.size());
  std::vector<int> counts(n_classes, 0);
  for (std::size_t i : idx) ++counts[labels[i]];
  const double parent = gini(counts, total);
  if (parent <= 0.0) return best;

  std::vector<std::pair<double, int>> vals(idx.size());
  std::vector<int> left(n_classes);
  for (std::size_t f = 0; f < m.dim; ++f) {
    for (std::size_t j = 0; j < idx.size(); ++j)
      vals[j] = {m.rows[idx[j]][f], labels[idx[j]]};
    std::sort(vals.begin(), vals.end());
    std::fill(left.begin(), left.end(), 0);
    int nl = 0;
    for (std::size_t j = 0; j + 1 < vals.size(); ++j) {
      ++left[vals[j].second];
      ++nl;
      if (vals[j].first == vals[j + 1].first) continue;
      const int nr = total - nl;
      std::vector<int> right(counts);
      for (int c = 0; c < n_classes; ++c) right[c] -= left[c];
      const double w = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
      const double gain = parent - w;
      if (gain > best.gain + 1e-15) {
        best.feature = static_cast<int>(f);
        best.threshold = 0.5 * (vals[j].first + vals[j + 1].first);
        best.gain = gain;
      }
    }
  }
  return best;
}

int majority(const std::vector<int>& labels, const std::vector<std::size_t>& idx, int n_classes,
             double* purity) {
  std::vector<int> counts(n_classes, 0);
  for (std::size_t i : idx) ++counts[labels[i]];
  int bestc = 0;
  for (int c = 1; c < n_classes; ++c)
    if (counts[c] > counts[bestc]) bestc = c;  // tie keeps the smaller index
  if (purity) *purity = idx.empty() ? 1.0 : static_cast<double>(counts[bestc]) / idx.size();
  return bestc;
}

// Best-first CART growth under a leaf budget.
DecisionTree grow_tree(const FeatureMatrix& m, const std::vector<int>& labels,
                       const std::vector<std::size_t>& rows, int n_classes, int max_leaves) {
  DecisionTree t;
  struct Open {
    int node;
    std::vector<std::size_t> idx;
    SplitChoice split;
  };
  std::vector<Open> open;

  t.nodes.push_back({});
  {
    double purity = 1.0;
    t.nodes[0].label = majority(labels, rows, n_classes, &purity);
    t.nodes[0].purity = purity;
    SplitChoice s = best_split(m, labels, rows, n_classes);
    if (s.feature >= 0) open.push_back({0, rows, s});
  }

  int leaves = 1;
  while (!open.empty() && leaves < max_leaves) {
    // pick the candidate with the largest gain; ties go to the older node
    std::size_t pick = 0;
    for (std::size_t i = 1; i < open.size(); ++i) {
      if (open[i].split.gain > open[pick].split.gain + 1e-15 ||
          (std::abs(open[i].split.gain - open[pick].split.gain) <= 1e-15 &&
           open[i].node < open[pick].node))
        pick = i;
    }
    Open cur = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));

    std::vector<std::size_t> li, ri;
    for (std::size_t i : cur.idx) {
      if (m.rows[i][cur.split.feature] <= cur.split.threshold)
        li.push_back(i);
      else
        ri.push_back(i);
    }
    if (li.empty() || ri.empty()) continue;

    const int l = static_cast<int>(t.nodes.size());
    t.nodes.push_back({});
    const int r = static_cast<int>(t.nodes.size());
    t.nodes.push_back({});
    t.nodes[cur.node].feature = cur.split.feature;
    t.nodes[cur.node].threshold = cur.split.threshold;
    t.nodes[cur.node].left = l;
    t.nodes[cur.node].right = r;
    ++leaves;

    for (auto [node, idx] : {std::pair{l, &li}, std::pair{r, &ri}}) {
      double purity = 1.0;
      t.nodes[node].label = majority(labels, *idx, n_classes, &purity);
      t.nodes[node].purity = purity;
      SplitChoice s = best_split(m, labels, *idx, n_classes);
      if (s.feature >= 0) open.push_back({node, *idx, s});
    }
  }
  return t;
}

}  // namespace

void FeatureMatrix::require_valid() const {
  if (rows.size() != labels.size())
    throw std::invalid_argument("FeatureMatrix: rows and labels misaligned");
  for (const auto& r : rows)
    if (r.size() != dim) throw std::invalid_argument("FeatureMatrix: row width != dim");
}

const TreeNode& DecisionTree::leaf_for(const std::vector<double>& x) const {
  const TreeNode* n = &nodes.at(0);
  while (n->feature >= 0)
    n = &nodes[x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right];
  return *n;
}

std::string classifier_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::FineTree: return "fine-tree";
    case ClassifierKind::FineKnn: return "fine-knn";
    case ClassifierKind::GaussianNB: return "gaussian-nb";
    case ClassifierKind::BaggedTrees: return "bagged-trees";
  }
  throw std::logic_error("classifier_name: bad kind");
}

ClassifierKind classifier_from_name(const std::string& name) {
  if (name == "fine-tree") return ClassifierKind::FineTree;
  if (name == "fine-knn") return ClassifierKind::FineKnn;
  if (name == "gaussian-nb") return ClassifierKind::GaussianNB;
  if (name == "bagged-trees") return ClassifierKind::BaggedTrees;
  throw std::invalid_argument("unknown classifier kind: " + name);
}

Normalizer fit_normalizer(const FeatureMatrix& train) {
  train.require_valid();
  if (train.size() == 0) throw std::invalid_argument("fit_normalizer: empty training set");
  const std::size_t n = train.size(), d = train.dim;
  Normalizer nm;
  nm.mean.assign(d, 0.0);
  nm.stddev.assign(d, 0.0);
  nm.degenerate.assign(d, false);
  for (const auto& r : train.rows)
    for (std::size_t j = 0; j < d; ++j) nm.mean[j] += r[j];
  for (std::size_t j = 0; j < d; ++j) nm.mean[j] /= static_cast<double>(n);
  for (const auto& r : train.rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double e = r[j] - nm.mean[j];
      nm.stddev[j] += e * e;
    }
  for (std::size_t j = 0; j < d; ++j) {
    nm.stddev[j] = std::sqrt(nm.stddev[j] / static_cast<double>(n));
    if (nm.stddev[j] <= 0.0) {
      nm.stddev[j] = 1.0;
      nm.degenerate[j] = true;
    }
  }
  return nm;
}

std::vector<double> Normalizer::apply(const std::vector<double>& v) const {
  if (v.size() != mean.size()) throw std::invalid_argument("Normalizer: dimension mismatch");
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = (v[j] - mean[j]) / stddev[j];
  return out;
}

FeatureMatrix Normalizer::apply(const FeatureMatrix& m) const {
  FeatureMatrix out;
  out.dim = m.dim;
  out.labels = m.labels;
  out.rows.reserve(m.size());
  for (const auto& r : m.rows) out.rows.push_back(apply(r));
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const std::vector<std::string>& labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);

  std::vector<std::size_t> train, test;
  Rng rng(seed);
  for (auto& [label, idx] : groups) {
    if (idx.size() < 2)
      throw std::invalid_argument("split: class '" + label + "' has fewer than 2 samples");
    // Fisher-Yates on the class block
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i + 1));
      std::swap(idx[i], idx[std::min(j, i)]);
    }
    const auto n = idx.size();
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

std::pair<FeatureMatrix, FeatureMatrix> split_dataset(const FeatureMatrix& m,
                                                      double train_fraction, std::uint64_t seed) {
  m.require_valid();
  auto [ti, si] = split_indices(m.labels, train_fraction, seed);
  FeatureMatrix a, b;
  a.dim = b.dim = m.dim;
  for (std::size_t i : ti) {
    a.rows.push_back(m.rows[i]);
    a.labels.push_back(m.labels[i]);
  }
  for (std::size_t i : si) {
    b.rows.push_back(m.rows[i]);
    b.labels.push_back(m.labels[i]);
  }
  return {a, b};
}

ClassifierModel train_classifier(ClassifierKind kind, const FeatureMatrix& train,
                                 const TrainHyper& hyper) {
  train.require_valid();
  if (train.size() == 0) throw std::invalid_argument("train_classifier: empty training set");
  ClassifierModel model;
  model.kind = kind;
  model.classes = sorted_classes(train.labels);
  model.dim = train.dim;
  if (model.classes.size() < 2)
    throw std::invalid_argument("train_classifier: need at least 2 classes");

  std::vector<int> labels(train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    labels[i] = class_index(model.classes, train.labels[i]);
  const int nc = static_cast<int>(model.classes.size());

  std::vector<std::size_t> all(train.size());
  std::iota(all.begin(), all.end(), 0);

  switch (kind) {
    case ClassifierKind::FineTree:
      model.tree = grow_tree(train, labels, all, nc, hyper.max_leaves);
      break;
    case ClassifierKind::FineKnn:
      model.knn_rows = train.rows;
      model.knn_labels = labels;
      model.knn_k = std::max(1, hyper.k);
      break;
    case ClassifierKind::GaussianNB: {
      model.nb_priors.assign(nc, 0.0);
      model.nb_means.assign(nc, std::vector<double>(train.dim, 0.0));
      model.nb_vars.assign(nc, std::vector<double>(train.dim, 0.0));
      std::vector<int> counts(nc, 0);
      for (std::size_t i = 0; i < train.size(); ++i) {
        ++counts[labels[i]];
        for (std::size_t j = 0; j < train.dim; ++j) model.nb_means[labels[i]][j] += train.rows[i][j];
      }
      for (int c = 0; c < nc; ++c) {
        model.nb_priors[c] = static_cast<double>(counts[c]) / train.size();
        for (std::size_t j = 0; j < train.dim; ++j) model.nb_means[c][j] /= counts[c];
      }
      double max_var = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i)
        for (std::size_t j = 0; j < train.dim; ++j) {
          const double e = train.rows[i][j] - model.nb_means[labels[i]][j];
          model.nb_vars[labels[i]][j] += e * e;
        }
      for (int c = 0; c < nc; ++c)
        for (std::size_t j = 0; j < train.dim; ++j) {
          model.nb_vars[c][j] /= counts[c];
          max_var = std::max(max_var, model.nb_vars[c][j]);
        }
      const double floor = std::max(1e-12 * max_var, 1e-300);
      for (auto& vs : model.nb_vars)
        for (auto& v : vs) v = std::max(v, floor);
      break;
    }
    case ClassifierKind::BaggedTrees: {
      Rng root(hyper.seed);
      model.bag.reserve(static_cast<std::size_t>(hyper.n_bagged_trees));
      for (int t = 0; t < hyper.n_bagged_trees; ++t) {
        Rng rng = root.child(static_cast<std::uint64_t>(t));
        std::vector<std::size_t> sample(train.size());
        for (auto& s : sample)
          s = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(train.size()));
        model.bag.push_back(grow_tree(train, labels, sample, nc, hyper.max_leaves));
      }
      break;
    }
  }
  return model;
}

Prediction predict(const ClassifierModel& model, const std::vector<double>& v) {
  if (v.size() != model.dim) throw std::invalid_argument("predict: dimension mismatch");
  const int nc = static_cast<int>(model.classes.size());

  switch (model.kind) {
    case ClassifierKind::FineTree: {
      const TreeNode& leaf = model.tree.leaf_for(v);
      return {model.classes[static_cast<std::size_t>(leaf.label)], leaf.purity};
    }
    case ClassifierKind::FineKnn: {
      // (distance^2, class) pairs; ordering ignores row position entirely
      std::vector<std::pair<double, int>> d(model.knn_rows.size());
      for (std::size_t i = 0; i < model.knn_rows.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < model.dim; ++j) {
          const double e = model.knn_rows[i][j] - v[j];
          s += e * e;
        }
        d[i] = {s, model.knn_labels[i]};
      }
      std::sort(d.begin(), d.end());
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(model.knn_k), d.size());
      // include every neighbor tied with the k-th distance
      std::size_t take = k;
      while (take < d.size() && d[take].first == d[k - 1].first) ++take;
      if (d[0].first == 0.0) {
        int best = nc;
        for (std::size_t i = 0; i < take && d[i].first == 0.0; ++i) best = std::min(best, d[i].second);
        return {model.classes[static_cast<std::size_t>(best)], 1.0};
      }
      std::vector<double> votes(nc, 0.0);
      double total = 0.0;
      for (std::size_t i = 0; i < take; ++i) {
        const double w = 1.0 / std::sqrt(d[i].first);
        votes[d[i].second] += w;
        total += w;
      }
      int best = 0;
      for (int c = 1; c < nc; ++c)
        if (votes[c] > votes[best]) best = c;
      return {model.classes[static_cast<std::size_t>(best)], votes[best] / total};
    }
    case ClassifierKind::GaussianNB: {
      std::vector<double> logp(nc);
      for (int c = 0; c < nc; ++c) {
        double lp = std::log(model.nb_priors[c]);
        for (std::size_t j = 0; j < model.dim; ++j) {
          const double var = model.nb_vars[c][j];
          const double e = v[j] - model.nb_means[c][j];
          lp += -0.5 * std::log(2.0 * 3.14159265358979323846 * var) - e * e / (2.0 * var);
        }
        logp[c] = lp;
      }
      const double mx = *std::max_element(logp.begin(), logp.end());
      double z = 0.0;
      for (double lp : logp) z += std::exp(lp - mx);
      int best = 0;
      for (int c = 1; c < nc; ++c)
        if (logp[c] > logp[best]) best = c;
      return {model.classes[static_cast<std::size_t>(best)], std::exp(logp[best] - mx) / z};
    }
    case ClassifierKind::BaggedTrees: {
      std::vector<int> votes(nc, 0);
      for (const auto& t : model.bag) ++votes[t.leaf_for(v).label];
      int best = 0;
      for (int c = 1; c < nc; ++c)
        if (votes[c] > votes[best]) best = c;
      return {model.classes[static_cast<std::size_t>(best)],
              model.bag.empty() ? 0.0 : static_cast<double>(votes[best]) / model.bag.size()};
    }
  }
  throw std::logic_error("predict: bad kind");
}

Metrics evaluate(const ClassifierModel& model, const FeatureMatrix& test) {
  test.require_valid();
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  Metrics m;
  m.classes = model.classes;
  for (const auto& l : test.labels)
    if (class_index(m.classes, l) < 0) m.classes.push_back(l);
  std::sort(m.classes.begin(), m.classes.end());
  m.classes.erase(std::unique(m.classes.begin(), m.classes.end()), m.classes.end());

  const int nc = static_cast<int>(m.classes.size());
  m.confusion.assign(nc, std::vector<int>(nc, 0));
  int hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Prediction p = predict(model, test.rows[i]);
    const int t = class_index(m.classes, test.labels[i]);
    const int q = class_index(m.classes, p.label);
    ++m.confusion[t][q];
    if (t == q) ++hits;
  }
  m.accuracy = static_cast<double>(hits) / test.size();
  return m;
}

std::vector<double> raw_s21_features(const S21Sweep& sweep) {
  sweep.require_valid();
  std::vector<double> out(sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i)
    out[i] = 20.0 * std::log10(std::max(std::abs(sweep.values[i]), 1e-300));
  return out;
}

double fisher_ratio(const FeatureMatrix& m, std::size_t dim_index) {
  m.require_valid();
  if (dim_index >= m.dim) throw std::invalid_argument("fisher_ratio: dimension out of range");
  std::map<std::string, std::vector<double>> groups;
  for (std::size_t i = 0; i < m.size(); ++i) groups[m.labels[i]].push_back(m.rows[i][dim_index]);
  if (groups.size() < 2) throw std::invalid_argument("fisher_ratio: need at least 2 classes");

  std::vector<std::pair<double, double>> stats;  // mean, variance
  for (const auto& [label, xs] : groups) {
    double mu = 0.0;
    for (double x : xs) mu += x;
    mu /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mu) * (x - mu);
    var /= static_cast<double>(xs.size());
    stats.emplace_back(mu, var);
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < stats.size(); ++i)
    for (std::size_t j = i + 1; j < stats.size(); ++j) {
      const double num = (stats[i].first - stats[j].first) * (stats[i].first - stats[j].first);
      const double den = stats[i].second + stats[j].second;
      ++pairs;
      if (num == 0.0) continue;               // identical means contribute 0
      if (den == 0.0) return std::numeric_limits<double>::infinity();
      sum += num / den;
    }
  return sum / static_cast<double>(pairs);
}

}  // namespace ofp
