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

#include "geotile/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "geotile/geo_core.hpp"
#include "geotile/log.hpp"
#include "geotile/parallel.hpp"
#include "geotile/random.hpp"
#include "geotile/tile_store.hpp"

namespace geotile {

namespace fs = std::filesystem;

namespace {

std::size_t point_count(const Geometry& g) { return geometry_points(g).size(); }

void write_file_atomic(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out << data;
    if (!out.flush()) throw Error(fmt::format("write failed: {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string IngestReport::table() const {
  return fmt::format(
      "elements:           {}\n"
      "nodes:              {}\n"
      "ways:               {}\n"
      "relations:          {}\n"
      "multipolygons:      {}\n"
      "unresolved ways:    {}\n"
      "untagged ways:      {}\n"
      "entities:           {}\n"
      "clipped pieces:     {}\n"
      "degenerate pieces:  {}\n"
      "tiles:              {}\n"
      "groups:             {}\n",
      elements, assembly.nodes, assembly.ways, assembly.relations, assembly.multipolygons, assembly.unresolved_ways,
      assembly.untagged_ways_dropped, entities, tiling.pieces_out, tiling.degenerate, tiling.tiles, groups);
}

std::vector<TileGroup> ingest_elements(std::span<const RawElement> elements, const IngestOptions& opts,
                                       IngestReport* report) {
  IngestReport r;
  r.elements = elements.size();
  const auto entities = assemble_entities(elements, &r.assembly);
  r.entities = entities.size();
  auto groups = group_tiles(tile_entities(entities, opts.zoom, opts.jobs, &r.tiling));
  r.groups = groups.size();
  if (report) *report = r;
  return groups;
}

IngestReport run_ingest(const fs::path& pbf, const fs::path& store, const IngestOptions& opts) {
  if (!fs::is_regular_file(pbf)) throw Error(fmt::format("no such file: {}", pbf.string()));
  const auto elements = read_pbf_file(pbf.string());
  IngestReport report;
  const auto groups = ingest_elements(elements, opts, &report);
  write_store(store, groups);
  return report;
}

std::string ProcessReport::table() const {
  return fmt::format(
      "tiles in:           {}\n"
      "dropped (sparse):   {}\n"
      "dropped (dense):    {}\n"
      "tiles out:          {}\n"
      "entities:           {}\n"
      "points before:      {}\n"
      "points after:       {}\n"
      "visibility graphs:  {}\n",
      tiles_in, dropped_sparse, dropped_dense, tiles_out, entities, points_before, points_after, visgraphs);
}

Tile process_tile(const Tile& t, const ProcessOptions& opts) {
  if (!(t.extent_m > 0.0)) throw Error(fmt::format("tile {} has no extent", to_string(t.id)));
  const double eps = opts.eps_m / t.extent_m;
  const double min_side = kMinBoxSideM / t.extent_m;
  const std::uint64_t tile_seed = derive_seed(derive_seed(opts.seed, "minbox"), hash_string(to_string(t.id)));

  Tile out = t;
  for (std::size_t i = 0; i < out.entities.size(); ++i) {
    Entity& e = out.entities[i];
    e.geometry = simplify(e.geometry, eps);
    e.minbox = min_area_bbox(e.geometry, derive_seed(tile_seed, static_cast<std::uint64_t>(i)), min_side);
    e.visgraph.reset();
    if (const auto* mp = std::get_if<MultiPolygon>(&e.geometry)) {
      try {
        e.visgraph = visibility_edges(*mp).edges;
      } catch (const GeometryError& err) {
        log_warn(fmt::format("tile {} entity {}: no visibility graph: {}", to_string(t.id), e.id, err.what()));
      }
    }
  }
  return out;
}

std::vector<TileGroup> process_groups(std::vector<TileGroup> groups, const ProcessOptions& opts,
                                      ProcessReport* report) {
  struct Counts {
    std::size_t in = 0, out = 0, sparse = 0, dense = 0, entities = 0, before = 0, after = 0, graphs = 0;
  };
  std::vector<Counts> counts(groups.size());

  parallel_for(groups.size(), opts.jobs, [&](std::size_t g) {
    Counts& c = counts[g];
    std::vector<Tile> kept;
    for (const Tile& t : groups[g].tiles) {
      ++c.in;
      const std::size_t n = t.entities.size();
      if (!filter_outliers(t, opts.bounds)) {
        (n < opts.bounds.min_entities ? c.sparse : c.dense) += 1;
        log_info(fmt::format("dropped tile {} with {} entities", to_string(t.id), n));
        continue;
      }
      Tile p = process_tile(t, opts);
      for (std::size_t i = 0; i < n; ++i) {
        c.before += point_count(t.entities[i].geometry);
        c.after += point_count(p.entities[i].geometry);
        c.graphs += p.entities[i].visgraph.has_value();
      }
      c.entities += n;
      ++c.out;
      kept.push_back(std::move(p));
    }
    groups[g].tiles = std::move(kept);
  });

  std::erase_if(groups, [](const TileGroup& g) { return g.tiles.empty(); });

  if (report) {
    ProcessReport r;
    for (const auto& c : counts) {
      r.tiles_in += c.in;
      r.tiles_out += c.out;
      r.dropped_sparse += c.sparse;
      r.dropped_dense += c.dense;
      r.entities += c.entities;
      r.points_before += c.before;
      r.points_after += c.after;
      r.visgraphs += c.graphs;
    }
    *report = r;
  }
  return groups;
}

ProcessReport run_process(const fs::path& in_store, const fs::path& out_store, const ProcessOptions& opts) {
  ProcessReport report;
  const auto groups = process_groups(read_store_groups(in_store), opts, &report);
  write_store(out_store, groups);
  return report;
}

std::string SynthReport::table() const {
  std::string s = fmt::format(
      "task:               {}\n"
      "tiles in:           {}\n"
      "pruned:             {}\n"
      "rebalanced away:    {}\n"
      "samples:            {}\n"
      "train/val/test:     {}/{}/{}\n"
      "label mean:         {:.4f}\n"
      "zero labels:        {}\n"
      "sentinel labels:    {}\n"
      "unparseable values: {}\n",
      task, tiles_in, pruned, rebalanced_away, samples, split_samples[0], split_samples[1], split_samples[2],
      label_mean, zero_labels, sentinel_labels, unparseable_values);
  for (const auto& [pattern, n] : tag_counts) s += fmt::format("tags {:<14} {}\n", pattern + ":", n);
  return s;
}

SynthResult synthesize_task(std::span<const TileGroup> groups, const TaskSpec& spec, const SynthOptions& opts) {
  spec.validate();
  SynthResult res;
  SynthReport& r = res.report;
  r.task = spec.name;
  for (const auto& p : spec.counted) r.tag_counts[p.str()] = 0;

  std::vector<const Tile*> tiles;
  std::map<TileId, GroupKey> group_of;
  for (const auto& g : groups)
    for (const auto& t : g.tiles) {
      tiles.push_back(&t);
      group_of[t.id] = g.key;
    }
  r.tiles_in = tiles.size();

  std::vector<std::optional<double>> labels(tiles.size());
  std::vector<std::size_t> unparseable(tiles.size(), 0);
  parallel_for(tiles.size(), opts.jobs, [&](std::size_t i) {
    LabelDiagnostics d;
    labels[i] = compute_label(*tiles[i], spec, &d);
    unparseable[i] = d.unparseable_values;
  });

  std::vector<TaskSample> labelled;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    r.unparseable_values += unparseable[i];
    if (!labels[i]) {
      ++r.pruned;
      continue;
    }
    labelled.push_back({tiles[i]->id, *labels[i]});
    for (const auto& e : tiles[i]->entities)
      for (const auto& tag : e.tags)
        for (const auto& p : spec.counted)
          if (p.matches(tag)) ++r.tag_counts[p.str()];
  }

  auto kept = rebalance(labelled, spec, derive_seed(opts.seed, spec.name));
  r.rebalanced_away = labelled.size() - kept.size();
  std::sort(kept.begin(), kept.end(),
            [](const TaskSample& a, const TaskSample& b) { return to_string(a.tile) < to_string(b.tile); });

  std::vector<GroupKey> keys;
  for (const auto& s : kept) keys.push_back(group_of.at(s.tile));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  const auto assignment = split_groups(keys, opts.ratios, derive_seed(opts.seed, "split"));

  std::map<TileId, const Tile*> by_id;
  for (const Tile* t : tiles) by_id[t->id] = t;
  std::map<GroupKey, std::vector<Tile>> masked;
  double sum = 0.0;
  for (const auto& s : kept) {
    const Split split = assignment.at(group_of.at(s.tile));
    res.split_of.push_back(split);
    ++r.split_samples[static_cast<std::size_t>(split)];
    sum += s.label;
    r.zero_labels += s.label == 0.0;
    r.sentinel_labels += s.label == kNoRoadSentinel;
    masked[group_of.at(s.tile)].push_back(apply_mask(*by_id.at(s.tile), spec));
  }
  r.samples = kept.size();
  r.label_mean = kept.empty() ? 0.0 : sum / static_cast<double>(kept.size());
  res.samples = std::move(kept);

  for (auto& [key, ts] : masked) {
    std::sort(ts.begin(), ts.end(), [](const Tile& a, const Tile& b) { return a.id < b.id; });
    res.masked_groups.push_back({key, std::move(ts)});
  }
  return res;
}

SynthReport run_synth_task(const fs::path& store, const TaskSpec& spec, const fs::path& out, const SynthOptions& opts) {
  const auto groups = read_store_groups(store);
  auto res = synthesize_task(groups, spec, opts);

  const fs::path dir = out / spec.name;
  fs::create_directories(dir);
  for (Split split : {Split::train, Split::val, Split::test}) {
    std::string csv = "tile_id,label\n";
    for (std::size_t i = 0; i < res.samples.size(); ++i)
      if (res.split_of[i] == split) csv += fmt::format("{},{}\n", to_string(res.samples[i].tile), res.samples[i].label);
    write_file_atomic(dir / fmt::format("{}.csv", to_string(split)), csv);
  }
  write_store(out / (spec.name + ".masked"), res.masked_groups);
  return res.report;
}

}  // namespace geotile
