#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "oracles.hpp"
#include "teamrec/costmodel.hpp"
#include "teamrec/rng.hpp"
#include "testutil.hpp"

using namespace teamrec;
using testutil::TempDir;

namespace {

// Costs are multiples of 1/64, so every partial sum is exact and summation
// order cannot matter — "equals the oracle" means bitwise here.
double dyadic(Rng& rng) { return static_cast<double>(rng.uniform_int(0, 640)) / 64.0; }

CostModel random_model(Rng& rng, int n_tasks, int n_edges, bool with_pins) {
  CostModel m;
  for (int i = 0; i < n_tasks; ++i) {
    CostTask t;
    t.name = "t" + std::to_string(i);
    t.pt_cpu = dyadic(rng);
    t.pt_gpu = dyadic(rng);
    if (with_pins && rng.uniform() < 0.25) {
      const int opt = static_cast<int>(rng.uniform_int(0, m.n_nodes));
      t.pinned = opt == 0 ? Placement{PlaceKind::Cpu, 0} : Placement{PlaceKind::Gpu, opt - 1};
    }
    m.tasks.push_back(std::move(t));
  }
  for (int e = 0; e < n_edges; ++e) {
    CostEdge edge;
    edge.from = "t" + std::to_string(rng.uniform_int(0, n_tasks - 1));
    edge.to = "t" + std::to_string(rng.uniform_int(0, n_tasks - 1));
    edge.ct_gpu_cpu = dyadic(rng);
    edge.ct_node_node = dyadic(rng);
    m.edges.push_back(std::move(edge));
  }
  return m;
}

void randomize_placement(Rng& rng, CostModel& m) {
  for (const auto& t : m.tasks) {
    const int opt = static_cast<int>(rng.uniform_int(0, m.n_nodes));
    m.placement[t.name] = opt == 0 ? Placement{PlaceKind::Cpu, 0} : Placement{PlaceKind::Gpu, opt - 1};
  }
}

CostModel two_task_model() {
  CostModel m;
  m.tasks = {{"motion", 2.0, 0.5, {}}, {"segment", 3.0, 1.0, {}}};
  return m;
}

}  // namespace

TEST_CASE("placements have canonical nodes and names") {
  const Placement cpu{PlaceKind::Cpu, 0};
  const Placement cpu_odd{PlaceKind::Cpu, 5};  // node is irrelevant for CPU
  const Placement g0{PlaceKind::Gpu, 0};
  const Placement g1{PlaceKind::Gpu, 1};
  CHECK(cpu.effective_node() == 0);
  CHECK(cpu_odd.effective_node() == 0);
  CHECK(g1.effective_node() == 1);
  CHECK(cpu == cpu_odd);
  CHECK_FALSE(cpu == g0);
  CHECK_FALSE(g0 == g1);
  CHECK(placement_name(cpu) == "cpu");
  CHECK(placement_name(g0) == "gpu0");
  CHECK(placement_name(g1) == "gpu1");
}

TEST_CASE("cost model validation") {
  CostModel m = two_task_model();
  CHECK_NOTHROW(m.validate());

  m.n_nodes = 0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = two_task_model();
  m.tasks[0].name.clear();
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = two_task_model();
  m.tasks[1].pt_gpu = -1.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = two_task_model();
  m.tasks[1].name = "motion";
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = two_task_model();
  m.tasks[0].pinned = Placement{PlaceKind::Gpu, 7};
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = two_task_model();
  m.edges.push_back({"motion", "ghost", 0.0, 0.0});
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = two_task_model();
  m.edges.push_back({"motion", "segment", -0.5, 0.0});
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = two_task_model();
  m.placement["ghost"] = Placement{PlaceKind::Cpu, 0};
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = two_task_model();
  m.placement["motion"] = Placement{PlaceKind::Gpu, 9};
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("total time closed forms") {
  SECTION("all costs zero") {
    CostModel m;
    m.tasks = {{"a", 0.0, 0.0, {}}, {"b", 0.0, 0.0, {}}};
    m.edges = {{"a", "b", 0.0, 0.0}};
    m.placement["a"] = {PlaceKind::Cpu, 0};
    m.placement["b"] = {PlaceKind::Gpu, 1};
    CHECK(estimate_total_time(m) == 0.0);
  }

  SECTION("two cpu tasks sum their processing times") {
    CostModel m = two_task_model();
    m.placement["motion"] = {PlaceKind::Cpu, 0};
    m.placement["segment"] = {PlaceKind::Cpu, 0};
    CHECK(estimate_total_time(m) == 5.0);
  }

  SECTION("kind and node penalties are independent") {
    CostModel m = two_task_model();
    m.edges = {{"motion", "segment", 1.0, 10.0}};
    m.placement["motion"] = {PlaceKind::Gpu, 0};
    m.placement["segment"] = {PlaceKind::Cpu, 0};
    // kinds differ, but both sit on node 0
    CHECK(estimate_total_time(m) == 0.5 + 3.0 + 1.0);

    m.placement["motion"] = {PlaceKind::Gpu, 1};
    // kinds differ and nodes differ: one edge pays both penalties
    CHECK(estimate_total_time(m) == 0.5 + 3.0 + 1.0 + 10.0);

    m.placement["motion"] = {PlaceKind::Gpu, 0};
    m.placement["segment"] = {PlaceKind::Gpu, 1};
    // same kind, different nodes
    CHECK(estimate_total_time(m) == 0.5 + 1.0 + 10.0);
  }

  SECTION("doubling one term moves the total by exactly that term") {
    CostModel m = two_task_model();
    m.edges = {{"motion", "segment", 1.0, 10.0}};
    m.placement["motion"] = {PlaceKind::Gpu, 1};
    m.placement["segment"] = {PlaceKind::Cpu, 0};
    const double base = estimate_total_time(m);
    m.edges[0].ct_node_node = 20.0;
    CHECK(estimate_total_time(m) == base + 10.0);
  }

  SECTION("missing placement is an error") {
    CostModel m = two_task_model();
    m.placement["motion"] = {PlaceKind::Cpu, 0};
    CHECK_THROWS_AS(estimate_total_time(m), InvalidArgument);
  }
}

TEST_CASE("estimate equals term-by-term summation on random models") {
  Rng rng(8080);
  for (int trial = 0; trial < 100; ++trial) {
    CostModel m = random_model(rng, 3 + trial % 4, 2 + trial % 6, false);
    randomize_placement(rng, m);
    CHECK(estimate_total_time(m) == oracle::sum_cost_terms(m));
  }
}

TEST_CASE("placement optimizer closed forms") {
  SECTION("a lone gpu-friendly task moves to gpu0") {
    CostModel m;
    m.tasks = {{"hmm", 5.0, 1.0, {}}};
    const PlacementResult r = optimize_placement(m);
    CHECK(r.total == 1.0);
    CHECK(r.placement.at("hmm") == Placement{PlaceKind::Gpu, 0});
  }

  SECTION("an expensive boundary keeps the task on cpu") {
    CostModel m;
    m.tasks = {{"source", 0.0, 0.0, Placement{PlaceKind::Cpu, 0}}, {"task", 5.0, 1.0, {}}};
    m.edges = {{"source", "task", 10.0, 0.0}};
    const PlacementResult r = optimize_placement(m);
    CHECK(r.total == 5.0);  // cpu: 5 beats gpu: 1 + 10
    CHECK(r.placement.at("task").kind == PlaceKind::Cpu);
    CHECK(r.placement.at("source").kind == PlaceKind::Cpu);
  }

  SECTION("exact ties prefer cpu, then lower gpu nodes") {
    CostModel m;
    m.tasks = {{"flat", 2.0, 2.0, {}}};
    CHECK(optimize_placement(m).placement.at("flat").kind == PlaceKind::Cpu);
    m.tasks[0].pt_gpu = 1.0;  // gpu0 and gpu1 now tie
    CHECK(optimize_placement(m).placement.at("flat") == Placement{PlaceKind::Gpu, 0});
  }

  SECTION("pins are respected even when suboptimal") {
    CostModel m;
    m.tasks = {{"stuck", 1.0, 50.0, Placement{PlaceKind::Gpu, 1}}};
    const PlacementResult r = optimize_placement(m);
    CHECK(r.placement.at("stuck") == Placement{PlaceKind::Gpu, 1});
    CHECK(r.total == 50.0);
  }

  SECTION("bounds") {
    CostModel empty;
    CHECK_THROWS_AS(optimize_placement(empty), InvalidArgument);
    CostModel big;
    for (int i = 0; i < 21; ++i) big.tasks.push_back({"t" + std::to_string(i), 1.0, 1.0, {}});
    CHECK_THROWS_AS(optimize_placement(big), InvalidArgument);
  }
}

TEST_CASE("optimizer matches brute force on eight-task instances") {
  Rng rng(2718);
  for (int trial = 0; trial < 10; ++trial) {
    const CostModel m = random_model(rng, 8, 10, trial % 2 == 1);
    const PlacementResult got = optimize_placement(m);
    const PlacementResult want = oracle::brute_force_placement(m);
    CHECK(got.total == want.total);
    CHECK(got.placement == want.placement);

    // never beaten by a random feasible placement
    CostModel probe = m;
    for (int k = 0; k < 20; ++k) {
      probe.placement.clear();
      randomize_placement(rng, probe);
      for (const auto& t : m.tasks)
        if (t.pinned) probe.placement[t.name] = *t.pinned;
      CHECK(estimate_total_time(probe) >= got.total);
    }
  }
}

TEST_CASE("cost model files round trip") {
  CostModel m;
  m.n_nodes = 3;
  m.tasks = {{"motion", 1.5, 0.25, {}},
             {"segment", 2.0, 0.5, Placement{PlaceKind::Cpu, 0}},
             {"hmm", 4.0, 0.125, Placement{PlaceKind::Gpu, 2}}};
  m.edges = {{"motion", "segment", 0.5, 1.0}, {"segment", "hmm", 0.25, 2.0}};
  m.placement["motion"] = {PlaceKind::Cpu, 0};
  m.placement["segment"] = {PlaceKind::Cpu, 0};
  m.placement["hmm"] = {PlaceKind::Gpu, 2};

  const std::string text = format_cost_model(m);
  const CostModel back = parse_cost_model(text);
  CHECK(format_cost_model(back) == text);
  CHECK(back.n_nodes == 3);
  REQUIRE(back.tasks.size() == 3);
  CHECK(back.tasks[2].pinned.has_value());
  CHECK(*back.tasks[2].pinned == Placement{PlaceKind::Gpu, 2});
  CHECK(estimate_total_time(back) == estimate_total_time(m));

  TempDir dir;
  save_cost_model(m, dir / "model.cost");
  CHECK(format_cost_model(load_cost_model(dir / "model.cost")) == text);

  SECTION("comments and blank lines are ignored") {
    const CostModel c = parse_cost_model("# header comment\ncostmodel v1\n\n  # indented\ntask solo 1 2\n");
    REQUIRE(c.tasks.size() == 1);
    CHECK(c.tasks[0].pt_gpu == 2.0);
  }

  SECTION("corrupt inputs") {
    CHECK_THROWS_AS(parse_cost_model(""), IoError);
    CHECK_THROWS_AS(parse_cost_model("task a 1 2\n"), IoError);  // header must come first
    CHECK_THROWS_AS(parse_cost_model("costmodel v2\n"), IoError);
    CHECK_THROWS_AS(parse_cost_model("costmodel v1\ntask broken 1\n"), IoError);
    CHECK_THROWS_AS(parse_cost_model("costmodel v1\ntask a 1 2 pin tpu\n"), IoError);
    CHECK_THROWS_AS(parse_cost_model("costmodel v1\nwidget a\n"), IoError);
    CHECK_THROWS_AS(parse_cost_model("costmodel v1\nplace a orbit\n"), IoError);
    CHECK_THROWS_AS(parse_cost_model("costmodel v1\nedge a b 1 2\n"), ConfigError);  // unknown endpoints
    CHECK_THROWS_AS(parse_cost_model("costmodel v1\nnodes 0\ntask a 1 2\n"), ConfigError);
    try {
      parse_cost_model("costmodel v1\ntask ok 1 2\ntask broken 1\n", "model.cost");
      FAIL("expected an io error");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("model.cost:3") != std::string::npos);
    }
  }
}
