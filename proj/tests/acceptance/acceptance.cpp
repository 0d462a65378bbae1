// Copyright 2026 The geotile Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <unistd.h>

#include "../common/generators.hpp"
#include "../common/oracles.hpp"
#include "geotile/eval.hpp"
#include "geotile/geometry_ops.hpp"
#include "geotile/jepa_mask.hpp"
#include "geotile/pbf.hpp"
#include "geotile/pipeline.hpp"
#include "geotile/random.hpp"
#include "geotile/synthetic.hpp"
#include "geotile/task_synth.hpp"
#include "geotile/tef.hpp"
#include "geotile/tokenize.hpp"
#include "geotile/train_support.hpp"

namespace geotile {
namespace {

namespace fs = std::filesystem;
using testing::fixture_path;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

TaskSpec task(const std::string& name) { return load_task_spec(std::string(GEOTILE_CONFIG_DIR) + "/tasks/" + name + ".json"); }

Outcome harmonic_scores() {
  Outcome o;
  const auto t0 = Clock::now();
  std::ifstream in(fixture_path("model_mae.csv"));
  const auto board = read_scoreboard_csv(in);
  const double tagpool = board.score_of("TagPool"), jepa = board.score_of("GeoJEPa-T");
  o.detail = fmt::format("TagPool {:.4f}, GeoJEPa-T {:.4f}", tagpool, jepa);
  if (std::abs(tagpool - 0.84) > 0.005) o.fail(fmt::format("TagPool {:.4f} not within 0.84 +- 0.005", tagpool));
  if (std::abs(jepa - 0.65) > 0.005) o.fail(fmt::format("GeoJEPa-T {:.4f} not within 0.65 +- 0.005", jepa));
  if (seconds_since(t0) >= 1.0) o.fail("slower than 1 s");
  return o;
}

Outcome random_mask_context() {
  Outcome o;
  const auto t0 = Clock::now();
  const int trials = 10000;
  const std::uint32_t n = 1000;
  double mean = 0.0;
  std::size_t short_after = 0;
  for (int s = 0; s < trials; ++s) {
    auto m = random_mask(n, 0.45, 4, derive_seed(17, static_cast<std::uint64_t>(s)));
    mean += static_cast<double>(m.context.size()) / n / trials;
    enforce_min_context(m, n, 0.10, derive_seed(18, static_cast<std::uint64_t>(s)));
    short_after += m.context.size() < 100;
  }
  o.detail = fmt::format("mean context {:.5f}, below 10% after min-context: {}", mean, short_after);
  if (std::abs(mean - 0.0915) > 0.005) o.fail(o.detail);
  if (short_after != 0) o.fail(o.detail);
  if (seconds_since(t0) >= 10.0) o.fail("slower than 10 s");
  return o;
}

Outcome modality_span() {
  Outcome o;
  std::vector<Modality> mods(5, Modality::entity);
  mods.resize(201, Modality::image);
  std::set<std::size_t> sizes;
  for (std::uint64_t s = 0; s < 200; ++s) {
    SampleMask m;
    if (!modality_mask(mods, s, m)) {
      o.fail("modality mask refused a bimodal sample");
      return o;
    }
    sizes.insert(m.context.size());
  }
  o.detail = fmt::format("context sizes {{{}}} of 201", fmt::join(sizes, ", "));
  if (sizes != std::set<std::size_t>{5, 196}) o.fail(o.detail);
  return o;
}

Outcome padding_invariance() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(41);
  std::size_t cases = 0;
  while (cases < 1000) {
    auto tb = testing::fuzz_token_batch(rng, 6, 40, 16);
    if (tb.total_valid() < 2) continue;
    std::vector<float> target(tb.payload.size());
    for (auto& x : target) x = static_cast<float>(rng.uniform(-3, 3));
    const auto valid = tb.valid_mask();
    const double h = huber_masked(tb.payload, target, valid, tb.dim, 2.0);
    const auto vc = vicreg_var_cov(tb.payload, valid, tb.dim);

    // Same batch with extra PAD columns holding arbitrary values.
    const std::size_t extra = 1 + rng.below(20);
    std::vector<float> pred2, target2;
    std::vector<std::uint8_t> valid2;
    for (std::size_t b = 0; b < tb.batch; ++b) {
      for (std::size_t i = 0; i < tb.max_len + extra; ++i) {
        const bool old = i < tb.max_len;
        valid2.push_back(old ? valid[tb.row(b, i)] : 0);
        for (std::size_t k = 0; k < tb.dim; ++k) {
          pred2.push_back(old ? tb.vec(b, i)[k] : static_cast<float>(rng.uniform(-50, 50)));
          target2.push_back(old ? target[tb.row(b, i) * tb.dim + k] : static_cast<float>(rng.uniform(-50, 50)));
        }
      }
    }
    const double h2 = huber_masked(pred2, target2, valid2, tb.dim, 2.0);
    const auto vc2 = vicreg_var_cov(pred2, valid2, tb.dim);
    if (h2 != h || vc2.variance != vc.variance || vc2.covariance != vc.covariance) {
      o.fail(fmt::format("case {}: outputs changed after padding", cases));
      return o;
    }
    ++cases;
  }
  o.detail = fmt::format("{} batches, exact equality", cases);
  if (seconds_since(t0) >= 30.0) o.fail("slower than 30 s");
  return o;
}

Outcome collapse_fixture() {
  Outcome o;
  const std::vector<float> z(64 * 32, 0.25f);
  const std::vector<std::uint8_t> valid(64, 1);
  const auto vc = vicreg_var_cov(z, valid, 32, 1.0, 1e-4);
  o.detail = fmt::format("variance {:.12f}, covariance {}", vc.variance, vc.covariance);
  if (std::abs(vc.variance - (1.0 - std::sqrt(1e-4))) > 1e-9 || std::abs(vc.covariance) > 1e-9) o.fail(o.detail);
  return o;
}

Outcome visibility_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(61);
  std::vector<MultiPolygon> cases{testing::courtyard()};
  while (cases.size() < 100) cases.push_back(testing::random_multipolygon(rng, 6, 60));
  std::size_t edges = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto fast = visibility_edges(cases[i]), slow = visibility_edges_bruteforce(cases[i]);
    if (fast.edges != slow.edges) {
      o.fail(fmt::format("case {} differs from brute force", i));
      return o;
    }
    edges += fast.edges.size();
  }
  MultiPolygon big;
  while (testing::vertex_count(big) < 500) big = testing::random_multipolygon(rng, 6, 560);
  auto t1 = Clock::now();
  const auto fast = visibility_edges(big);
  const double fast_s = seconds_since(t1);
  t1 = Clock::now();
  const auto slow = visibility_edges_bruteforce(big);
  const double slow_s = seconds_since(t1);
  o.detail = fmt::format("100 cases, {} edges; {} vertices: {:.3f} s vs brute force {:.3f} s", edges,
                         testing::vertex_count(big), fast_s, slow_s);
  if (fast.edges != slow.edges) o.fail("large instance differs from brute force");
  if (fast_s > slow_s) o.fail(o.detail);
  if (seconds_since(t0) >= 60.0) o.fail("slower than 60 s");
  return o;
}

Outcome min_box_bounds() {
  Outcome o;
  Rng rng(71);
  double worst = 0.0;
  std::size_t above = 0, below_exact = 0, thin_sides = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    // Points uniform in a disk: no preferred orientation.
    std::vector<NormPoint> pts;
    const auto n = 3 + rng.below(40);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double r = 0.3 * std::sqrt(rng.uniform()), a = rng.uniform(0.0, 2.0 * kPi);
      pts.push_back({0.5 + r * std::cos(a), 0.5 + r * std::sin(a)});
    }
    const auto hull = convex_hull(pts);
    const auto box = min_area_bbox(hull, static_cast<std::uint64_t>(trial));
    const double exact = testing::scan_min_box_area(hull);
    const double approx = box_area(box);
    worst = std::max(worst, approx / exact);
    below_exact += approx < exact - 1e-12;
    above += approx > 1.2 * exact;
    for (int k = 0; k < 4; ++k) thin_sides += box_side(box, k) < 0.005 - 1e-12;
  }
  std::vector<NormPoint> square;
  for (int k = 0; k < 4; ++k)
    square.push_back({0.5 + std::cos(k * kPi / 2) / std::sqrt(2.0), 0.5 + std::sin(k * kPi / 2) / std::sqrt(2.0)});
  const double area = box_area(min_area_bbox(square, 1));
  const double expect = std::pow(std::cos(5 * kPi / 180) + std::sin(5 * kPi / 180), 2);
  o.detail = fmt::format("{} of 1000 hulls above 1.2x exact, worst {:.3f}; {} below exact; {} short sides; "
                         "rotated square {:.7f} vs {:.7f}",
                         above, worst, below_exact, thin_sides, area, expect);
  if (above || below_exact || thin_sides || std::abs(area - expect) > 1e-6) o.fail(o.detail);
  return o;
}

Outcome douglas_peucker_soundness() {
  Outcome o;
  Rng rng(81);
  std::size_t removed = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<NormPoint> line;
    const auto n = 2 + rng.below(60);
    for (std::uint64_t i = 0; i < n; ++i) line.push_back({rng.uniform(), rng.uniform()});
    const double eps = rng.uniform(0.0, 0.2);
    const auto out = douglas_peucker(line, eps);
    if (out.size() < 2 || out.front() != line.front() || out.back() != line.back()) {
      o.fail(fmt::format("line {}: endpoints lost", trial));
      return o;
    }
    std::size_t j = 0;
    for (const auto& p : line) {
      if (j < out.size() && p == out[j]) {
        ++j;
        continue;
      }
      ++removed;
      if (testing::distance_to_polyline(p, out) > eps + 1e-12) {
        o.fail(fmt::format("line {}: removed point farther than eps", trial));
        return o;
      }
    }
  }
  o.detail = fmt::format("1000 lines, {} points removed", removed);
  return o;
}

Outcome rebin() {
  Outcome o;
  const std::vector<std::uint32_t> lengths{5, 2, 8, 1, 7, 3, 6, 4};
  const auto r = length_sorted_rebin(lengths, 2, 4, 0);
  const auto cells = padded_cells(r.batches, lengths);

  // Every perfect pairing of the eight samples.
  std::vector<std::uint64_t> all;
  std::function<void(std::vector<std::size_t>, std::uint64_t)> rec = [&](std::vector<std::size_t> left,
                                                                        std::uint64_t acc) {
    if (left.empty()) {
      all.push_back(acc);
      return;
    }
    for (std::size_t j = 1; j < left.size(); ++j) {
      auto rest = left;
      const auto cost = 2ull * std::max(lengths[left[0]], lengths[left[j]]);
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(j));
      rest.erase(rest.begin());
      rec(rest, acc + cost);
    }
  };
  std::vector<std::size_t> idx(8);
  std::iota(idx.begin(), idx.end(), 0);
  rec(idx, 0);
  const auto best = *std::min_element(all.begin(), all.end());
  // Reverse order {8,7},{6,5},... pairs neighbours; the spec's worst case pairs
  // each of the four largest with a small sample.
  const std::uint64_t worst = 2 * 4 * 8;

  Rng rng(91);
  for (int w = 0; w < 10000; ++w) {
    const std::size_t B = 1 + rng.below(8), G = 1 + rng.below(6), n = rng.below(B * G + 1) + 1;
    std::vector<std::uint32_t> ls(n);
    for (auto& l : ls) l = static_cast<std::uint32_t>(1 + rng.below(500));
    const auto rb = length_sorted_rebin(ls, B, G, static_cast<std::uint64_t>(w));
    std::vector<std::size_t> seen;
    for (const auto& b : rb.batches) seen.insert(seen.end(), b.begin(), b.end());
    std::sort(seen.begin(), seen.end());
    std::vector<std::size_t> expect(n);
    std::iota(expect.begin(), expect.end(), 0);
    if (seen != expect) {
      o.fail(fmt::format("window {} lost or duplicated samples", w));
      return o;
    }
  }
  o.detail = fmt::format("padded cells {} (best of {} pairings {}, worst-case bound {}); 10000 windows", cells,
                         all.size(), best, worst);
  if (cells != 40 || best != 40 || all.size() != 105 || !(cells < worst)) o.fail(o.detail);
  return o;
}

Outcome task_validity() {
  Outcome o;
  const auto tiles = synthetic_tiles({.tiles = 500, .seed = 101});
  std::size_t checked = 0;
  for (const char* name : {"buildings", "bridge", "car_bridge", "traffic_signals"}) {
    const auto spec = task(name);
    for (const auto& t : tiles) {
      const auto label = compute_label(apply_mask(t, spec), spec);
      if (label != 0.0 && label != kNoRoadSentinel) {
        o.fail(fmt::format("{}: tile {} keeps label evidence after masking", name, to_string(t.id)));
        return o;
      }
      ++checked;
    }
  }
  const auto speed = task("max_speed");
  std::size_t road_without = 0;
  std::set<TileId> bad;
  for (const auto& t : tiles) {
    const bool road = std::any_of(t.entities.begin(), t.entities.end(),
                                  [&](const Entity& e) { return matches_any(e.tags, speed.road); });
    const bool limit = std::any_of(t.entities.begin(), t.entities.end(), [](const Entity& e) {
      return std::any_of(e.tags.begin(), e.tags.end(), [](const TagKV& tag) { return tag.key == "maxspeed"; });
    });
    if (road && !limit) bad.insert(t.id);
  }
  road_without = bad.size();
  for (const auto& t : prune_tiles(tiles, speed))
    if (bad.count(t.id)) {
      o.fail(fmt::format("max speed kept road tile {} without a limit", to_string(t.id)));
      return o;
    }

  std::vector<TaskSample> zeros;
  for (std::uint32_t i = 0; i < 10000; ++i) zeros.push_back({{16, i, 7}, 0.0});
  const auto buildings = task("buildings");
  const auto a = rebalance(zeros, buildings, 3), b = rebalance(zeros, buildings, 3);
  const double sigma = std::sqrt(10000 * 0.1 * 0.9);
  o.detail = fmt::format("{} masked labels checked; {} road tiles without limit pruned; rebalance kept {}", checked,
                         road_without, a.size());
  if (a != b) o.fail("rebalance is not reproducible");
  if (std::abs(static_cast<double>(a.size()) - 1000.0) > 3 * sigma) o.fail(o.detail);
  if (road_without == 0) o.fail("corpus has no road tile without a limit");
  return o;
}

Outcome schedule_endpoints() {
  Outcome o;
  const std::uint64_t steps = 10000;
  const auto p = preset("geojepa-t", steps);
  const auto& s = p.schedule;
  const auto warm = static_cast<std::uint64_t>(std::llround(s.lr_warmup_frac * steps));
  const std::vector<std::pair<double, double>> checks{
      {lr_at(0, s), 0.0},          {lr_at(warm, s), 1e-3},          {lr_at(steps, s), 1e-6},
      {momentum_at(0, s), 0.997},  {momentum_at(steps, s), 1.0},   {wd_at(0, s), 0.04},
      {wd_at(steps, s), 0.4}};
  double err = 0.0;
  for (const auto& [got, want] : checks) err = std::max(err, std::abs(got - want));
  o.detail = fmt::format("max endpoint error {:.3g}", err);
  if (err > 1e-9) o.fail(o.detail);
  return o;
}

Outcome round_trips() {
  Outcome o;
  Rng rng(121);
  for (std::uint32_t i = 0; i < 1000; ++i) {
    const Tile t = testing::fuzz_tile(rng, i);
    if (parse_tef_line(write_tef_line(t)) != t) {
      o.fail(fmt::format("TEF case {} differs after round trip", i));
      return o;
    }
    const TokenBatch tb = testing::fuzz_token_batch(rng);
    std::stringstream buf;
    write_token_batch(buf, tb);
    if (read_token_batch(buf) != tb) {
      o.fail(fmt::format("TokenBatch case {} differs after round trip", i));
      return o;
    }
  }
  o.detail = "1000 tiles and 1000 token batches";
  return o;
}

Outcome throughput() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / fmt::format("geotile_acceptance_{}", ::getpid());
  fs::create_directories(dir);
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto elements = synthetic_osm({.tiles = 1000, .seed = 131});
  {
    std::ofstream out(dir / "corpus.osm.pbf", std::ios::binary);
    PbfWriter w(out);
    for (const auto& e : elements) w.add(e);
    w.finish();
  }
  const auto t0 = Clock::now();
  const auto ingest = run_ingest(dir / "corpus.osm.pbf", dir / "raw", {kDefaultZoom, jobs});
  ProcessOptions popts;
  popts.jobs = jobs;
  const auto processed = run_process(dir / "raw", dir / "processed", popts);
  std::size_t samples = 0;
  for (const char* name : {"buildings", "max_speed", "traffic_signals", "bridge", "car_bridge"}) {
    SynthOptions sopts;
    sopts.jobs = jobs;
    samples += run_synth_task(dir / "processed", task(name), dir / "tasks", sopts).samples;
  }
  const double secs = seconds_since(t0);
  fs::remove_all(dir);
  o.detail = fmt::format("{} tiles in, {} kept, {} task samples in {:.1f} s on {} thread(s)", ingest.tiling.tiles,
                         processed.tiles_out, samples, secs, jobs);
  if (processed.tiles_out == 0 || samples == 0) o.fail("pipeline produced nothing");
  if (secs >= 60.0) o.fail(o.detail);
  return o;
}

}  // namespace
}  // namespace geotile

int main() {
  using namespace geotile;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"harmonic-mean scores from published MAEs", harmonic_scores},
      {"random mask context fraction", random_mask_context},
      {"modality mask context span", modality_span},
      {"padding invariance of loss kernels", padding_invariance},
      {"collapsed tokens fixture", collapse_fixture},
      {"visibility graph matches brute force", visibility_oracle},
      {"min-area box approximation", min_box_bounds},
      {"Douglas-Peucker soundness", douglas_peucker_soundness},
      {"length-sorted re-binning", rebin},
      {"task synthesis validity", task_validity},
      {"schedule endpoints", schedule_endpoints},
      {"serialization round trips", round_trips},
      {"1000-tile pipeline throughput", throughput},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.fail(fmt::format("exception: {}", e.what()));
    }
    failed += !o.pass;
    std::cout << fmt::format("{} {:>2} {} ({}; {:.2f} s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                             o.detail, seconds_since(t0))
              << std::flush;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
