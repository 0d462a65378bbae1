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

#include "geotile/task_synth.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "geotile/geo_core.hpp"
#include "geotile/parallel.hpp"
#include "geotile/random.hpp"

namespace geotile {

using json = nlohmann::ordered_json;

TagPattern TagPattern::parse(std::string_view s) {
  const auto eq = s.find('=');
  if (eq == std::string_view::npos) throw Error(fmt::format("tag pattern '{}' lacks '='", s));
  TagPattern p{std::string(s.substr(0, eq)), std::string(s.substr(eq + 1))};
  if (p.key.empty() || p.value.empty()) throw Error(fmt::format("tag pattern '{}' has an empty side", s));
  if (p.key == "*" && p.value == "*") throw Error("tag pattern '*=*' matches everything");
  return p;
}

bool matches_any(const TagKV& tag, std::span<const TagPattern> patterns) {
  return std::any_of(patterns.begin(), patterns.end(), [&](const TagPattern& p) { return p.matches(tag); });
}

bool matches_any(const Tags& tags, std::span<const TagPattern> patterns) {
  return std::any_of(tags.begin(), tags.end(), [&](const TagKV& t) { return matches_any(t, patterns); });
}

std::string_view to_string(LabelKind k) {
  switch (k) {
    case LabelKind::count: return "count";
    case LabelKind::binary: return "binary";
    case LabelKind::max_value: return "max_value";
    case LabelKind::max_value_with_sentinel: return "max_value_with_sentinel";
  }
  return "?";
}

void TaskSpec::validate() const {
  if (name.empty()) throw Error("task has no name");
  if (counted.empty()) throw Error(fmt::format("task '{}' counts no tags", name));
  if (!(clamp_lo < clamp_hi)) throw Error(fmt::format("task '{}': clamp range must satisfy lo < hi", name));
  if (rebalance && !(rebalance->keep_probability > 0.0 && rebalance->keep_probability <= 1.0))
    throw Error(fmt::format("task '{}': keep_probability must be in (0, 1]", name));
}

bool TaskSpec::entity_matches(const Entity& e) const {
  return matches_any(e.tags, counted) && (require.empty() || matches_any(e.tags, require));
}

namespace {

std::vector<TagPattern> patterns_from(const json& j, const char* field) {
  std::vector<TagPattern> out;
  if (!j.contains(field)) return out;
  for (const auto& s : j.at(field)) out.push_back(TagPattern::parse(s.get<std::string>()));
  return out;
}

json patterns_json(const std::vector<TagPattern>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back(p.str());
  return a;
}

}  // namespace

TaskSpec parse_task_spec(std::string_view json_text) {
  TaskSpec spec;
  try {
    const json j = json::parse(json_text);
    spec.name = j.at("name").get<std::string>();
    const std::string kind = j.at("label").get<std::string>();
    if (kind == "count") spec.label_kind = LabelKind::count;
    else if (kind == "binary") spec.label_kind = LabelKind::binary;
    else if (kind == "max_value") spec.label_kind = LabelKind::max_value;
    else if (kind == "max_value_with_sentinel") spec.label_kind = LabelKind::max_value_with_sentinel;
    else throw Error(fmt::format("unknown label kind '{}'", kind));
    spec.counted = patterns_from(j, "counted");
    spec.require = patterns_from(j, "require");
    const auto& clamp = j.at("clamp");
    if (clamp.size() != 2) throw Error("clamp must be [lo, hi]");
    spec.clamp_lo = clamp[0].get<double>();
    spec.clamp_hi = clamp[1].get<double>();
    if (j.contains("mask")) {
      const auto& m = j.at("mask");
      spec.mask.remove_counted = m.value("remove_counted", true);
      spec.mask.remove_tags = patterns_from(m, "remove_tags");
      spec.mask.remove_features_if = patterns_from(m, "remove_features_if");
      spec.mask.remove_point_features = patterns_from(m, "remove_point_features");
    }
    if (j.contains("rebalance")) {
      const auto& r = j.at("rebalance");
      spec.rebalance = Rebalance{r.at("label").get<double>(), r.at("keep_probability").get<double>()};
    }
    if (j.contains("road")) spec.road = patterns_from(j, "road");
  } catch (const json::exception& err) {
    throw Error(fmt::format("task config: {}", err.what()));
  }
  spec.validate();
  return spec;
}

TaskSpec load_task_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open task config '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_task_spec(ss.str());
  } catch (const Error& err) {
    throw Error(fmt::format("{}: {}", path.string(), err.what()));
  }
}

std::string task_spec_json(const TaskSpec& spec) {
  json j = json::object();
  j["name"] = spec.name;
  j["label"] = to_string(spec.label_kind);
  j["counted"] = patterns_json(spec.counted);
  if (!spec.require.empty()) j["require"] = patterns_json(spec.require);
  j["clamp"] = json::array({spec.clamp_lo, spec.clamp_hi});
  j["mask"] = {{"remove_counted", spec.mask.remove_counted},
               {"remove_tags", patterns_json(spec.mask.remove_tags)},
               {"remove_features_if", patterns_json(spec.mask.remove_features_if)},
               {"remove_point_features", patterns_json(spec.mask.remove_point_features)}};
  if (spec.rebalance)
    j["rebalance"] = {{"label", spec.rebalance->label}, {"keep_probability", spec.rebalance->keep_probability}};
  j["road"] = patterns_json(spec.road);
  return j.dump(2);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_one_speed(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || !std::isfinite(v) || v < 0.0) return std::nullopt;
  const std::string_view unit = trim(std::string_view(p, static_cast<std::size_t>(s.data() + s.size() - p)));
  if (unit.empty() || unit == "km/h" || unit == "kmh" || unit == "kph") return v;
  if (unit == "mph") return v * 1.6;
  return std::nullopt;
}

}  // namespace

std::optional<double> parse_speed(std::string_view s) {
  std::optional<double> best;
  while (true) {
    const auto semi = s.find(';');
    if (auto v = parse_one_speed(s.substr(0, semi))) best = best ? std::max(*best, *v) : *v;
    if (semi == std::string_view::npos) break;
    s.remove_prefix(semi + 1);
  }
  return best;
}

std::optional<double> compute_label(const Tile& t, const TaskSpec& spec, LabelDiagnostics* diag) {
  switch (spec.label_kind) {
    case LabelKind::count:
    case LabelKind::binary: {
      const auto n = std::count_if(t.entities.begin(), t.entities.end(),
                                   [&](const Entity& e) { return spec.entity_matches(e); });
      if (spec.label_kind == LabelKind::binary) return n > 0 ? 1.0 : 0.0;
      return static_cast<double>(n);
    }
    case LabelKind::max_value:
    case LabelKind::max_value_with_sentinel: {
      if (spec.label_kind == LabelKind::max_value_with_sentinel &&
          std::none_of(t.entities.begin(), t.entities.end(),
                       [&](const Entity& e) { return matches_any(e.tags, spec.road); }))
        return kNoRoadSentinel;
      std::optional<double> best;
      for (const auto& e : t.entities) {
        if (!spec.entity_matches(e)) continue;
        for (const auto& tag : e.tags) {
          if (!matches_any(tag, spec.counted)) continue;
          if (auto v = parse_speed(tag.value)) {
            best = best ? std::max(*best, *v) : *v;
          } else if (diag) {
            ++diag->unparseable_values;
          }
        }
      }
      return best;
    }
  }
  return std::nullopt;
}

std::vector<TaskSample> label_tiles(std::span<const Tile> tiles, const TaskSpec& spec, LabelDiagnostics* diag) {
  std::vector<TaskSample> out;
  for (const auto& t : tiles)
    if (auto label = compute_label(t, spec, diag)) out.push_back({t.id, *label});
  return out;
}

std::vector<Tile> prune_tiles(std::span<const Tile> tiles, const TaskSpec& spec) {
  std::vector<Tile> out;
  for (const auto& t : tiles)
    if (compute_label(t, spec)) out.push_back(t);
  return out;
}

std::vector<TaskSample> rebalance(std::span<const TaskSample> samples, const TaskSpec& spec, std::uint64_t seed) {
  if (!spec.rebalance) return {samples.begin(), samples.end()};
  const std::uint64_t base = derive_seed(seed, "rebalance");
  std::vector<TaskSample> out;
  for (const auto& s : samples) {
    if (s.label == spec.rebalance->label) {
      Rng rng(derive_seed(base, hash_string(to_string(s.tile))));
      if (!rng.bernoulli(spec.rebalance->keep_probability)) continue;
    }
    out.push_back(s);
  }
  return out;
}

Tile apply_mask(const Tile& t, const TaskSpec& spec) {
  Tile out = t;
  out.entities.clear();
  for (const auto& e : t.entities) {
    if (matches_any(e.tags, spec.mask.remove_features_if)) continue;
    if (std::holds_alternative<Point>(e.geometry) && matches_any(e.tags, spec.mask.remove_point_features)) continue;
    Entity m = e;
    std::erase_if(m.tags, [&](const TagKV& tag) {
      return (spec.mask.remove_counted && matches_any(tag, spec.counted)) || matches_any(tag, spec.mask.remove_tags);
    });
    if (m.tags.empty() && !e.tags.empty()) continue;
    out.entities.push_back(std::move(m));
  }
  return out;
}

std::uint64_t Cooccurrence::intra_at(std::uint32_t a, std::uint32_t b) const {
  auto it = intra.find({std::min(a, b), std::max(a, b)});
  return it == intra.end() ? 0 : it->second;
}

std::uint64_t Cooccurrence::inter_at(std::uint32_t a, std::uint32_t b) const {
  auto it = inter.find({std::min(a, b), std::max(a, b)});
  return it == inter.end() ? 0 : it->second;
}

namespace {

void accumulate_tile(const Tile& t, const TagVocab& vocab, Cooccurrence& acc) {
  // For each tag of the tile: the first entity carrying it, and whether a
  // second distinct entity does too.
  struct Seen {
    std::size_t entity;
    bool multiple;
  };
  std::map<std::uint32_t, Seen> seen;
  for (std::size_t ei = 0; ei < t.entities.size(); ++ei) {
    std::vector<std::uint32_t> ids;
    for (const auto& tag : t.entities[ei].tags)
      if (auto i = vocab.find(tag)) ids.push_back(*i);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (std::size_t a = 0; a < ids.size(); ++a) {
      for (std::size_t b = a + 1; b < ids.size(); ++b) ++acc.intra[{ids[a], ids[b]}];
      auto [it, fresh] = seen.try_emplace(ids[a], Seen{ei, false});
      if (!fresh && it->second.entity != ei) it->second.multiple = true;
    }
  }
  for (auto a = seen.begin(); a != seen.end(); ++a) {
    for (auto b = std::next(a); b != seen.end(); ++b) {
      const bool same_only = !a->second.multiple && !b->second.multiple && a->second.entity == b->second.entity;
      if (!same_only) ++acc.inter[{a->first, b->first}];
    }
  }
}

}  // namespace

Cooccurrence cooccurrence(std::span<const Tile> tiles, const TagVocab& vocab, unsigned jobs) {
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(jobs, tiles.size()));
  std::vector<Cooccurrence> partial(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::size_t lo = tiles.size() * c / chunks, hi = tiles.size() * (c + 1) / chunks;
    for (std::size_t i = lo; i < hi; ++i) accumulate_tile(tiles[i], vocab, partial[c]);
  });
  Cooccurrence out = std::move(partial[0]);
  for (std::size_t c = 1; c < chunks; ++c) {
    for (const auto& [k, v] : partial[c].intra) out.intra[k] += v;
    for (const auto& [k, v] : partial[c].inter) out.inter[k] += v;
  }
  return out;
}

}  // namespace geotile
