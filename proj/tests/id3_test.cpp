#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "teamrec/id3.hpp"
#include "teamrec/rng.hpp"
#include "testutil.hpp"

using namespace teamrec;
using testutil::TempDir;

namespace {

Id3Config tree_cfg(int n_classes) {
  Id3Config c;
  c.n_classes = n_classes;
  return c;
}

// Hand-built single tree mapping symbol s of the only feature to class s.
Id3Model symbol_identity_model(int n_classes) {
  Id3Model m;
  m.cfg = tree_cfg(n_classes);
  m.radices = {n_classes};
  DecisionTree t;
  DecisionTree::Node root;
  root.feature = 0;
  root.children.assign(static_cast<std::size_t>(n_classes), -1);
  t.nodes.push_back(root);
  for (int c = 0; c < n_classes; ++c) {
    DecisionTree::Node leaf;
    leaf.histogram.assign(static_cast<std::size_t>(n_classes), 0.0);
    leaf.histogram[static_cast<std::size_t>(c)] = 1.0;
    t.nodes[0].children[static_cast<std::size_t>(c)] = static_cast<int>(t.nodes.size());
    t.nodes.push_back(leaf);
  }
  m.trees.push_back(std::move(t));
  return m;
}

void random_dataset(Rng& rng, int n, const std::vector<int>& radices, int n_classes,
                    std::vector<std::vector<int>>& x, std::vector<int>& y) {
  x.assign(static_cast<std::size_t>(n), std::vector<int>(radices.size()));
  y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < radices.size(); ++f)
      x[static_cast<std::size_t>(i)][f] = static_cast<int>(rng.uniform_int(0, radices[f] - 1));
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(0, n_classes - 1));
  }
  // guarantee an impure root
  y[0] = 0;
  y[1] = 1;
}

}  // namespace

TEST_CASE("entropy matches closed forms") {
  CHECK(entropy({5.0, 5.0}) == 1.0);
  CHECK(entropy({7.0, 0.0}) == 0.0);
  CHECK(entropy({1.0}) == 0.0);

  const std::vector<double> counts = {3.0, 5.0, 2.0};
  double expect = 0.0;
  for (double c : counts) {
    const double p = c / 10.0;
    expect -= p * std::log2(p);
  }
  CHECK(entropy(counts) == Catch::Approx(expect).margin(1e-12));
  CHECK(entropy(counts) == Catch::Approx(oracle::direct_entropy(counts)).margin(1e-12));

  CHECK_THROWS_AS(entropy({2.0, -1.0}), InvalidArgument);
  CHECK_THROWS_AS(entropy({0.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(entropy({}), InvalidArgument);
}

TEST_CASE("information gain spans its extremes") {
  // feature 0 separates perfectly, feature 1 carries nothing
  const std::vector<std::vector<int>> x = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const std::vector<int> y = {0, 0, 1, 1};
  std::vector<std::size_t> idx = {0, 1, 2, 3};

  CHECK(information_gain(x, y, idx, 0, 2, 2) == 1.0);  // children pure, parent entropy 1 bit
  CHECK(information_gain(x, y, idx, 1, 2, 2) == 0.0);  // children mirror the parent
  CHECK(information_gain(x, y, idx, 0, 2, 2) ==
        Catch::Approx(oracle::brute_force_gain(x, y, 0, 2, 2)).margin(1e-12));
}

TEST_CASE("uniform labels collapse to a single leaf") {
  const std::vector<std::vector<int>> x = {{0, 1}, {1, 0}, {1, 1}, {0, 0}};
  const std::vector<int> y = {1, 1, 1, 1};
  const Id3Model m = id3_train(x, y, {2, 2}, tree_cfg(2));
  REQUIRE(m.trees.size() == 1);
  REQUIRE(m.trees[0].nodes.size() == 1);
  CHECK(m.trees[0].nodes[0].is_leaf());
  CHECK(m.trees[0].nodes[0].histogram == std::vector<double>{0.0, 4.0});
  CHECK(classify(m, {0, 1}).label == 1);
}

TEST_CASE("xor needs both features and memorizes them") {
  const std::vector<std::vector<int>> x = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const std::vector<int> y = {0, 1, 1, 0};
  std::vector<std::size_t> idx = {0, 1, 2, 3};
  // neither feature helps alone
  CHECK(information_gain(x, y, idx, 0, 2, 2) == 0.0);
  CHECK(information_gain(x, y, idx, 1, 2, 2) == 0.0);

  const Id3Model m = id3_train(x, y, {2, 2}, tree_cfg(2));
  const DecisionTree& t = m.trees[0];
  REQUIRE(t.nodes.size() == 7);
  REQUIRE_FALSE(t.nodes[0].is_leaf());
  CHECK(t.nodes[0].feature == 0);  // zero-gain tie keeps the lowest feature
  for (int child : t.nodes[0].children) {
    REQUIRE_FALSE(t.nodes[static_cast<std::size_t>(child)].is_leaf());
    CHECK(t.nodes[static_cast<std::size_t>(child)].feature == 1);
  }
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(classify(m, x[i]).label == y[i]);
}

TEST_CASE("weather table splits on outlook first") {
  // outlook {sunny,overcast,rain}, temperature {hot,mild,cool},
  // humidity {high,normal}, wind {weak,strong} -> play {no,yes}
  const std::vector<std::vector<int>> x = {
      {0, 0, 0, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}, {2, 1, 0, 0}, {2, 2, 1, 0},
      {2, 2, 1, 1}, {1, 2, 1, 1}, {0, 1, 0, 0}, {0, 2, 1, 0}, {2, 1, 1, 0},
      {0, 1, 1, 1}, {1, 1, 0, 1}, {1, 0, 1, 0}, {2, 1, 0, 1},
  };
  const std::vector<int> y = {0, 0, 1, 1, 1, 0, 1, 0, 1, 1, 1, 1, 1, 0};
  const std::vector<int> radices = {3, 3, 2, 2};

  const Id3Model m = id3_train(x, y, radices, tree_cfg(2));
  REQUIRE_FALSE(m.trees[0].nodes[0].is_leaf());
  CHECK(m.trees[0].nodes[0].feature == 0);
  CHECK(m.trees[0].nodes[0].feature == oracle::best_gain_feature(x, y, radices, 2));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(classify(m, x[i]).label == y[i]);
}

TEST_CASE("root split maximizes information gain on random data") {
  Rng rng(1301);
  const std::vector<int> radices = {3, 2, 4, 3};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<int>> x;
    std::vector<int> y;
    random_dataset(rng, 40, radices, 3, x, y);
    const Id3Model m = id3_train(x, y, radices, tree_cfg(3));
    REQUIRE_FALSE(m.trees[0].nodes[0].is_leaf());
    const int chosen = m.trees[0].nodes[0].feature;
    double best = -1.0;
    for (std::size_t f = 0; f < radices.size(); ++f)
      best = std::max(best, oracle::brute_force_gain(x, y, static_cast<int>(f), radices[f], 3));
    const double got = oracle::brute_force_gain(x, y, chosen, radices[static_cast<std::size_t>(chosen)], 3);
    CHECK(got >= best - 1e-12);
  }
}

TEST_CASE("consistent data is memorized exactly") {
  Rng rng(77);
  const std::vector<int> radices = {3, 2, 3, 2};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<int>> x;
    std::vector<int> y;
    random_dataset(rng, 50, radices, 3, x, y);
    for (std::size_t i = 0; i < x.size(); ++i)
      y[i] = (x[i][0] + 2 * x[i][1] + x[i][2] + x[i][3]) % 3;  // label is a function of the features
    Id3Config cfg = tree_cfg(3);
    cfg.min_samples = 1;
    const Id3Model m = id3_train(x, y, radices, cfg);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(classify(m, x[i]).label == y[i]);
  }
}

TEST_CASE("unseen branches fall back to the parent distribution") {
  // symbol 2 never occurs in training
  const std::vector<std::vector<int>> x = {{0}, {1}};
  const std::vector<int> y = {0, 1};
  Id3Config cfg = tree_cfg(2);
  cfg.min_samples = 1;
  const Id3Model m = id3_train(x, y, {3}, cfg);
  REQUIRE(m.trees[0].nodes.size() == 4);
  CHECK(classify(m, {0}).label == 0);
  CHECK(classify(m, {1}).label == 1);
  const Id3Prediction p = classify(m, {2});
  CHECK(p.distribution == std::vector<double>{1.0, 1.0});
  CHECK(p.label == 0);  // tied histogram picks the lowest class
}

TEST_CASE("depth and sample limits stop the recursion") {
  const std::vector<std::vector<int>> x = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const std::vector<int> y = {0, 1, 1, 0};

  Id3Config shallow = tree_cfg(2);
  shallow.max_depth = 1;
  const Id3Model m1 = id3_train(x, y, {2, 2}, shallow);
  REQUIRE(m1.trees[0].nodes.size() == 3);
  for (int child : m1.trees[0].nodes[0].children) {
    const auto& node = m1.trees[0].nodes[static_cast<std::size_t>(child)];
    REQUIRE(node.is_leaf());
    CHECK(node.histogram == std::vector<double>{1.0, 1.0});
  }

  Id3Config sparse = tree_cfg(2);
  sparse.min_samples = 5;
  const Id3Model m2 = id3_train(x, y, {2, 2}, sparse);
  REQUIRE(m2.trees[0].nodes.size() == 1);
  CHECK(m2.trees[0].nodes[0].is_leaf());
}

TEST_CASE("classification ties pick the lowest class") {
  Id3Model m;
  m.cfg = tree_cfg(3);
  m.radices = {2};
  DecisionTree t;
  DecisionTree::Node leaf;
  leaf.histogram = {0.0, 2.0, 2.0};
  t.nodes.push_back(leaf);
  m.trees.push_back(t);
  CHECK(classify(m, {0}).label == 1);
  m.trees[0].nodes[0].histogram = {2.0, 2.0, 1.0};
  CHECK(classify(m, {1}).label == 0);
}

TEST_CASE("classify validates its input") {
  const Id3Model m = symbol_identity_model(3);
  CHECK_THROWS_AS(classify(m, {}), InvalidArgument);
  CHECK_THROWS_AS(classify(m, {0, 1}), InvalidArgument);
  CHECK_THROWS_AS(classify(m, {3}), InvalidArgument);
  CHECK_THROWS_AS(classify(m, {-1}), InvalidArgument);
}

TEST_CASE("training rejects malformed datasets") {
  const std::vector<std::vector<int>> x = {{0, 1}, {1, 0}};
  const std::vector<int> y = {0, 1};
  const std::vector<int> radices = {2, 2};
  const Id3Config cfg = tree_cfg(2);

  CHECK_THROWS_AS(id3_train({}, {}, radices, cfg), InvalidArgument);
  CHECK_THROWS_AS(id3_train(x, {0}, radices, cfg), InvalidArgument);
  CHECK_THROWS_AS(id3_train(x, y, {}, cfg), InvalidArgument);
  CHECK_THROWS_AS(id3_train(x, y, {2, 1}, cfg), InvalidArgument);
  CHECK_THROWS_AS(id3_train({{0, 1, 0}, {1, 0, 1}}, y, radices, cfg), InvalidArgument);
  CHECK_THROWS_AS(id3_train({{0, 2}, {1, 0}}, y, radices, cfg), InvalidArgument);
  CHECK_THROWS_AS(id3_train(x, {0, 2}, radices, cfg), InvalidArgument);
  CHECK_THROWS_AS(id3_train(x, {0, -1}, radices, cfg), InvalidArgument);
}

TEST_CASE("config invariants are enforced") {
  const std::vector<std::vector<int>> x = {{0}, {1}};
  const std::vector<int> y = {0, 1};
  auto expect_bad = [&](void (*tweak)(Id3Config&)) {
    Id3Config cfg = tree_cfg(2);
    tweak(cfg);
    CHECK_THROWS_AS(id3_train(x, y, {2}, cfg), ConfigError);
  };
  expect_bad([](Id3Config& c) { c.n_trees = 0; });
  expect_bad([](Id3Config& c) { c.n_trees = 2; });  // tree_leaf is single-tree
  expect_bad([](Id3Config& c) { c.n_classes = 1; });
  expect_bad([](Id3Config& c) { c.max_depth = 0; });
  expect_bad([](Id3Config& c) { c.min_samples = 0; });
  expect_bad([](Id3Config& c) {
    c.mode = Id3Mode::ForestLeaves;
    c.feature_bagging_fraction = 0.0;
  });
  expect_bad([](Id3Config& c) {
    c.mode = Id3Mode::ForestLeaves;
    c.feature_bagging_fraction = 1.5;
  });
  expect_bad([](Id3Config& c) { c.role_window = 0; });

  CHECK_THROWS_AS(parse_id3_mode("bagged"), InvalidArgument);
  CHECK(parse_id3_mode(id3_mode_name(Id3Mode::ForestLeaves)) == Id3Mode::ForestLeaves);
  CHECK(parse_id3_mode(id3_mode_name(Id3Mode::TreeLeaf)) == Id3Mode::TreeLeaf);
}

TEST_CASE("a forest of identical trees votes like the single tree") {
  Rng rng(5150);
  const std::vector<int> radices = {3, 2, 4};
  std::vector<std::vector<int>> x;
  std::vector<int> y;
  random_dataset(rng, 60, radices, 3, x, y);
  const Id3Model single = id3_train(x, y, radices, tree_cfg(3));

  Id3Model forest;
  forest.cfg = single.cfg;
  forest.cfg.mode = Id3Mode::ForestLeaves;
  forest.cfg.n_trees = 3;
  forest.radices = radices;
  forest.trees = {single.trees[0], single.trees[0], single.trees[0]};

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> q(radices.size());
    for (std::size_t f = 0; f < radices.size(); ++f)
      q[f] = static_cast<int>(rng.uniform_int(0, radices[f] - 1));
    const Id3Prediction ps = classify(single, q);
    const Id3Prediction pf = classify(forest, q);
    CHECK(pf.label == ps.label);
    REQUIRE(pf.distribution.size() == ps.distribution.size());
    for (std::size_t c = 0; c < ps.distribution.size(); ++c)
      CHECK(pf.distribution[c] == 3.0 * ps.distribution[c]);  // integer counts, exact
  }
}

TEST_CASE("forest training is deterministic and backend independent") {
  Rng rng(99);
  const std::vector<int> radices = {2, 3, 2};
  std::vector<std::vector<int>> x;
  std::vector<int> y;
  random_dataset(rng, 60, radices, 2, x, y);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i][0];  // label equals the first feature

  Id3Config cfg = tree_cfg(2);
  cfg.mode = Id3Mode::ForestLeaves;
  cfg.n_trees = 5;
  cfg.feature_bagging_fraction = 1.0;
  cfg.seed = 4242;

  const Id3Model a = id3_train(x, y, radices, cfg);
  const Id3Model b = id3_train(x, y, radices, cfg);
  const Id3Model c = id3_train(x, y, radices, cfg, Backend::parallel(4));
  CHECK(format_id3(a) == format_id3(b));
  CHECK(format_id3(a) == format_id3(c));
  CHECK(a.trees.size() == 5);

  int correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) correct += classify(a, x[i]).label == y[i];
  CHECK(correct == static_cast<int>(x.size()));

  cfg.seed = 4243;
  const Id3Model d = id3_train(x, y, radices, cfg);
  CHECK(format_id3(a) != format_id3(d));  // bootstrap follows the seed
}

TEST_CASE("classify_batch matches element-wise classification") {
  Rng rng(31);
  const std::vector<int> radices = {3, 3};
  std::vector<std::vector<int>> x;
  std::vector<int> y;
  random_dataset(rng, 30, radices, 2, x, y);
  const Id3Model m = id3_train(x, y, radices, tree_cfg(2));

  std::vector<std::vector<int>> queries;
  for (int i = 0; i < 200; ++i)
    queries.push_back({static_cast<int>(rng.uniform_int(0, 2)), static_cast<int>(rng.uniform_int(0, 2))});
  const std::vector<int> seq = classify_batch(m, queries);
  const std::vector<int> par = classify_batch(m, queries, Backend::parallel(4));
  REQUIRE(seq.size() == queries.size());
  CHECK(seq == par);
  for (std::size_t i = 0; i < queries.size(); ++i) CHECK(seq[i] == classify(m, queries[i]).label);
  CHECK(classify_batch(m, {}).empty());
}

TEST_CASE("role smoothing follows the window-majority contract") {
  Id3Model m = symbol_identity_model(3);

  SECTION("window 1 is the raw stream") {
    m.cfg.role_window = 1;
    Rng rng(8);
    std::vector<std::vector<std::vector<int>>> frames(25);
    std::vector<std::vector<int>> raw(2, std::vector<int>(25));
    for (std::size_t t = 0; t < frames.size(); ++t) {
      frames[t].resize(2);
      for (std::size_t a = 0; a < 2; ++a) {
        raw[a][t] = static_cast<int>(rng.uniform_int(0, 2));
        frames[t][a] = {raw[a][t]};
      }
    }
    const auto roles = assign_roles(frames, m);
    for (std::size_t t = 0; t < frames.size(); ++t)
      for (std::size_t a = 0; a < 2; ++a) CHECK(roles[t][a] == raw[a][t]);
  }

  SECTION("a lone dissent is voted down") {
    m.cfg.role_window = 5;
    const std::vector<int> stream = {0, 0, 1, 0, 0};
    std::vector<std::vector<std::vector<int>>> frames;
    for (int s : stream) frames.push_back({{s}});
    const auto roles = assign_roles(frames, m);
    for (std::size_t t = 0; t < roles.size(); ++t) CHECK(roles[t][0] == 0);
  }

  SECTION("ties keep the previous role") {
    m.cfg.role_window = 2;
    std::vector<std::vector<std::vector<int>>> frames = {{{0}}, {{2}}, {{2}}};
    const auto roles = assign_roles(frames, m);
    CHECK(roles[0][0] == 0);
    CHECK(roles[1][0] == 0);  // {0,2} ties, keeps 0
    CHECK(roles[2][0] == 2);
  }

  SECTION("random streams match the oracle") {
    Rng rng(606);
    for (int w : {1, 3, 5}) {
      m.cfg.role_window = w;
      std::vector<std::vector<int>> raw(3, std::vector<int>(30));
      std::vector<std::vector<std::vector<int>>> frames(30);
      for (std::size_t t = 0; t < frames.size(); ++t) {
        frames[t].resize(3);
        for (std::size_t a = 0; a < 3; ++a) {
          raw[a][t] = static_cast<int>(rng.uniform_int(0, 2));
          frames[t][a] = {raw[a][t]};
        }
      }
      const auto roles = assign_roles(frames, m);
      for (std::size_t a = 0; a < 3; ++a) {
        const std::vector<int> expect = oracle::window_majority(raw[a], w, 3);
        for (std::size_t t = 0; t < frames.size(); ++t) CHECK(roles[t][a] == expect[t]);
      }
    }
  }

  SECTION("agent count must not vary") {
    std::vector<std::vector<std::vector<int>>> frames = {{{0}, {1}}, {{0}}};
    CHECK_THROWS_AS(assign_roles(frames, m), InvalidArgument);
  }

  SECTION("empty input stays empty") { CHECK(assign_roles({}, m).empty()); }
}

TEST_CASE("model files round trip") {
  Rng rng(2024);
  const std::vector<int> radices = {3, 2, 4};
  std::vector<std::vector<int>> x;
  std::vector<int> y;
  random_dataset(rng, 40, radices, 3, x, y);

  Id3Config cfg = tree_cfg(3);
  cfg.mode = Id3Mode::ForestLeaves;
  cfg.n_trees = 3;
  cfg.seed = 17;
  const Id3Model m = id3_train(x, y, radices, cfg);

  const std::string text = format_id3(m);
  const Id3Model back = parse_id3(text);
  CHECK(format_id3(back) == text);
  CHECK(back.radices == m.radices);
  CHECK(back.cfg.mode == m.cfg.mode);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> q(radices.size());
    for (std::size_t f = 0; f < radices.size(); ++f)
      q[f] = static_cast<int>(rng.uniform_int(0, radices[f] - 1));
    const Id3Prediction pa = classify(m, q);
    const Id3Prediction pb = classify(back, q);
    CHECK(pa.label == pb.label);
    CHECK(pa.distribution == pb.distribution);
  }

  TempDir dir;
  save_id3(m, dir / "roles.id3");
  const Id3Model loaded = load_id3(dir / "roles.id3");
  CHECK(format_id3(loaded) == text);
}

TEST_CASE("model parsing rejects corrupt files") {
  const Id3Model m = symbol_identity_model(2);
  const std::string good = format_id3(m);
  CHECK(parse_id3(good).trees.size() == 1);

  std::string bad = good;
  bad.replace(bad.find("id3 v1"), 6, "id3 v2");
  CHECK_THROWS_AS(parse_id3(bad), IoError);

  bad = good;
  bad.replace(bad.find("tree 0"), 6, "tree 1");
  CHECK_THROWS_AS(parse_id3(bad), IoError);

  bad = good;
  bad.replace(bad.find("leaf 1"), 6, "stump 1");
  CHECK_THROWS_AS(parse_id3(bad), IoError);

  bad = good;
  bad.replace(bad.find("internal 0"), 10, "internal 7");
  CHECK_THROWS_AS(parse_id3(bad), IoError);  // feature index out of range

  bad = good;
  bad.replace(bad.find("internal 0 1 2"), 14, "internal 0 9 2");
  CHECK_THROWS_AS(parse_id3(bad), IoError);  // child index out of range

  CHECK_THROWS_AS(parse_id3("not a model"), IoError);
  CHECK_THROWS_AS(load_id3("/nonexistent/roles.id3"), IoError);
}
