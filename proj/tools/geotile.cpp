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

// geotile: command-line front end. Data goes to files or stdout, diagnostics
// to stderr. Every random choice derives from --seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "geotile/eval.hpp"
#include "geotile/geo_core.hpp"
#include "geotile/jepa_mask.hpp"
#include "geotile/log.hpp"
#include "geotile/pbf.hpp"
#include "geotile/pipeline.hpp"
#include "geotile/random.hpp"
#include "geotile/synthetic.hpp"
#include "geotile/task_synth.hpp"
#include "geotile/tile_store.hpp"
#include "geotile/tokenize.hpp"
#include "geotile/train_support.hpp"
#include "geotile/types.hpp"

namespace fs = std::filesystem;
using namespace geotile;

namespace {

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw Error(fmt::format("no such file: {}", path));
}

void require_dir(const std::string& path) {
  if (!fs::is_directory(path)) throw Error(fmt::format("no such directory: {}", path));
}

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp));
    out << text;
    if (!out.flush()) throw Error(fmt::format("write failed: {}", tmp));
  }
  fs::rename(tmp, path);
}

/// Seeded unit-scale vectors for every tag of the corpus; a stand-in when no
/// pretrained table is supplied.
EmbeddingTable seeded_embeddings(std::span<const Tile> tiles, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable table(dim);
  for (const auto& [tag, n] : corpus_tag_counts(tiles)) {
    (void)n;
    Rng rng(derive_seed(seed, tag));
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    table.insert(tag, std::move(v));
  }
  return table;
}

EmbeddingTable embeddings_for(std::span<const Tile> tiles, const std::string& path, std::size_t dim,
                              std::uint64_t seed) {
  if (!path.empty()) return EmbeddingTable::load(path);
  return seeded_embeddings(tiles, dim, derive_seed(seed, "embeddings"));
}

std::map<std::string, double> read_label_csv(const std::string& path) {
  require_file(path);
  std::ifstream in(path);
  std::map<std::string, double> out;
  std::string line;
  std::getline(in, line);  // header
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(fmt::format("{}:{}: expected id,value", path, lineno));
    try {
      out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw Error(fmt::format("{}:{}: bad number", path, lineno));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tile-level OpenStreetMap datasets and JEPA training utilities"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  unsigned jobs = 1;
  app.add_option("--seed", seed, "Global seed; stages derive their own")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));

  // synth-osm
  auto* synth_osm = app.add_subcommand("synth-osm", "Write a seeded synthetic OSM PBF");
  std::string so_out;
  std::size_t so_tiles = 16;
  synth_osm->add_option("out", so_out, "Output .osm.pbf")->required();
  synth_osm->add_option("--tiles", so_tiles, "Number of tiles to populate")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse, tile, clip and group a PBF into a tile store");
  std::string in_pbf, in_store;
  int zoom = kDefaultZoom;
  ingest->add_option("pbf", in_pbf)->required();
  ingest->add_option("store", in_store)->required();
  ingest->add_option("--zoom", zoom)->capture_default_str()->check(CLI::Range(1, 24));

  // process
  auto* process = app.add_subcommand("process", "Simplify, add min-boxes and visibility graphs, filter outliers");
  std::string pr_in, pr_out;
  ProcessOptions popts;
  process->add_option("in", pr_in)->required();
  process->add_option("out", pr_out)->required();
  process->add_option("--eps-m", popts.eps_m, "Douglas-Peucker tolerance in metres")->capture_default_str();
  process->add_option("--min-entities", popts.bounds.min_entities)->capture_default_str();
  process->add_option("--max-entities", popts.bounds.max_entities)->capture_default_str();

  // synth-task
  auto* synth_task = app.add_subcommand("synth-task", "Label, mask and split a store for downstream tasks");
  std::string st_store, st_out;
  std::vector<std::string> st_tasks;
  synth_task->add_option("store", st_store)->required();
  synth_task->add_option("out", st_out)->required();
  synth_task->add_option("--task", st_tasks, "Task config JSON (repeatable)")->required();

  // encode
  auto* encode = app.add_subcommand("encode", "Assemble a padded token batch from a store");
  std::string en_store, en_out, en_table;
  std::size_t en_dim = 32;
  AssembleOptions aopts;
  encode->add_option("store", en_store)->required();
  encode->add_option("out", en_out, "Token batch file")->required();
  encode->add_option("--embeddings", en_table, "Tag embedding table; seeded vectors when omitted");
  encode->add_option("--dim", en_dim, "Dimension of seeded vectors")->capture_default_str();
  encode->add_flag("--image", aopts.include_image, "Append 14x14 image patch tokens");
  encode->add_flag("--class-token", aopts.class_token, "Append an image class token");

  // mask-plan
  auto* mask_plan = app.add_subcommand("mask-plan", "Plan JEPA context/target masks for a token batch");
  std::string mp_in, mp_out;
  std::size_t mp_batch = 96;
  bool mp_stats = false;
  mask_plan->add_option("batch", mp_in)->required();
  mask_plan->add_option("--out", mp_out, "JSON-lines plan");
  mask_plan->add_option("--batch-size", mp_batch)->capture_default_str()->check(CLI::PositiveNumber);
  mask_plan->add_flag("--stats", mp_stats, "Print per-strategy context-fraction histograms");

  // loss-check
  auto* loss_check = app.add_subcommand("loss-check", "Loss terms and collapse diagnostics of a token batch");
  std::string lc_in, lc_target, lc_preset = "geojepa-t";
  loss_check->add_option("batch", lc_in)->required();
  loss_check->add_option("--target", lc_target, "Batch of regression targets; defaults to the input");
  loss_check->add_option("--preset", lc_preset)->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions or a model scoreboard");
  std::string ev_board, ev_pred, ev_labels, ev_train, ev_task;
  eval->add_option("--scoreboard", ev_board, "CSV of per-task MAEs, header model,<task>...");
  eval->add_option("--pred", ev_pred, "CSV tile_id,prediction");
  eval->add_option("--labels", ev_labels, "CSV tile_id,label");
  eval->add_option("--train", ev_train, "Training labels for the median baseline");
  eval->add_option("--task", ev_task, "Task config providing the clamp range");

  // knn
  auto* knn_cmd = app.add_subcommand("knn", "Nearest tiles by TagPool region embedding");
  std::string kn_store, kn_table, kn_query, kn_metric = "l2";
  std::size_t kn_k = 8, kn_dim = 32;
  knn_cmd->add_option("store", kn_store)->required();
  knn_cmd->add_option("--query", kn_query, "Query tile id z_x_y")->required();
  knn_cmd->add_option("--embeddings", kn_table, "Tag embedding table; seeded vectors when omitted");
  knn_cmd->add_option("--dim", kn_dim)->capture_default_str();
  knn_cmd->add_option("--k", kn_k)->capture_default_str()->check(CLI::PositiveNumber);
  knn_cmd->add_option("--metric", kn_metric)->capture_default_str()->check(CLI::IsMember({"l2", "cosine"}));

  // schedule
  auto* schedule = app.add_subcommand("schedule", "Learning-rate, weight-decay and momentum schedules");
  std::string sc_preset = "geojepa-t";
  std::uint64_t sc_steps = 1000;
  bool sc_dump = false;
  schedule->add_option("--preset", sc_preset)->capture_default_str();
  schedule->add_option("--steps", sc_steps)->capture_default_str()->check(CLI::PositiveNumber);
  schedule->add_flag("--dump", sc_dump, "Print every step as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_osm->parsed()) {
      SyntheticOptions so;
      so.tiles = so_tiles;
      so.seed = derive_seed(seed, "synth-osm");
      const auto elements = synthetic_osm(so);
      const std::string tmp = so_out + ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write {}", tmp));
        PbfWriter w(out);
        for (const auto& e : elements) w.add(e);
        w.finish();
      }
      fs::rename(tmp, so_out);
      std::cerr << fmt::format("wrote {} elements to {}\n", elements.size(), so_out);
    } else if (ingest->parsed()) {
      const auto report = run_ingest(in_pbf, in_store, {zoom, jobs});
      std::cout << report.table();
    } else if (process->parsed()) {
      require_dir(pr_in);
      popts.seed = derive_seed(seed, "process");
      popts.jobs = jobs;
      const auto report = run_process(pr_in, pr_out, popts);
      std::cout << report.table();
    } else if (synth_task->parsed()) {
      require_dir(st_store);
      std::vector<TaskSpec> specs;
      for (const auto& t : st_tasks) {
        require_file(t);
        specs.push_back(load_task_spec(t));
      }
      for (const auto& spec : specs) {
        SynthOptions so;
        so.seed = derive_seed(seed, "synth-task");
        so.jobs = jobs;
        std::cout << run_synth_task(st_store, spec, st_out, so).table() << "\n";
      }
    } else if (encode->parsed()) {
      require_dir(en_store);
      if (!en_table.empty()) require_file(en_table);
      const auto tiles = read_store(en_store);
      const auto table = embeddings_for(tiles, en_table, en_dim, seed);
      const auto batch = assemble_token_batch(tiles, table, aopts);
      save_token_batch(en_out, batch);
      std::cerr << fmt::format("encoded {} tiles, {} valid tokens, max length {}\n", batch.batch,
                               batch.total_valid(), batch.max_len);
    } else if (mask_plan->parsed()) {
      require_file(mp_in);
      const auto batch = load_token_batch(mp_in);
      const MaskConfig cfg;
      cfg.validate();
      const auto seeds = sample_seeds(batch.tile_ids, derive_seed(seed, "mask-plan"));

      // Chunk the file into training batches; each chunk draws one strategy.
      std::string lines;
      std::map<Strategy, ContextStats> totals;
      std::size_t fallbacks = 0;
      for (std::size_t start = 0, chunk = 0; start < batch.batch; start += mp_batch, ++chunk) {
        const std::size_t n = std::min(mp_batch, batch.batch - start);
        TokenBatch sub(n, batch.max_len, batch.dim);
        for (std::size_t b = 0; b < n; ++b) {
          const std::size_t src = start + b;
          std::copy_n(batch.modality.begin() + batch.row(src, 0), batch.max_len, sub.modality.begin() + sub.row(b, 0));
          std::copy_n(batch.box(src, 0), batch.max_len * 8, sub.box(b, 0));
          std::copy_n(batch.vec(src, 0), batch.max_len * batch.dim, sub.vec(b, 0));
          sub.valid_len[b] = batch.valid_len[src];
          sub.tile_ids[b] = batch.tile_ids[src];
        }
        const std::span<const std::uint64_t> sub_seeds(seeds.data() + start, n);

        const Strategy chosen = select_strategy(cfg, chunk, derive_seed(seed, "mask-plan"));
        const auto plan = plan_batch(sub, chosen, cfg, sub_seeds);
        fallbacks += plan.fallbacks;
        for (std::size_t b = 0; b < n; ++b) lines += plan_json_line(plan, b, sub.tile_ids[b]) + "\n";

        if (mp_stats) {
          for (Strategy s : {Strategy::random, Strategy::area, Strategy::modality}) {
            const auto st = context_stats(plan_batch(sub, s, cfg, sub_seeds), sub.valid_len);
            auto& t = totals[s];
            t.mean_fraction = (t.mean_fraction * static_cast<double>(t.samples) +
                               st.mean_fraction * static_cast<double>(st.samples)) /
                              static_cast<double>(std::max<std::size_t>(1, t.samples + st.samples));
            t.samples += st.samples;
            for (std::size_t k = 0; k < 10; ++k) t.histogram[k] += st.histogram[k];
          }
        }
      }
      if (!mp_out.empty()) write_text(mp_out, lines);
      if (mp_stats) {
        std::cout << "strategy  samples  mean_ctx  histogram (context fraction in tenths)\n";
        for (const auto& [s, t] : totals) {
          std::cout << fmt::format("{:<9} {:>7}  {:>8.4f} ", to_string(s), t.samples, t.mean_fraction);
          for (auto h : t.histogram) std::cout << ' ' << h;
          std::cout << '\n';
        }
      }
      std::cerr << fmt::format("planned {} samples, {} unimodal fallbacks\n", batch.batch, fallbacks);
    } else if (loss_check->parsed()) {
      require_file(lc_in);
      const auto p = preset(lc_preset, 1);
      const auto batch = load_token_batch(lc_in);
      TokenBatch target = batch;
      if (!lc_target.empty()) {
        require_file(lc_target);
        target = load_token_batch(lc_target);
        if (target.batch != batch.batch || target.max_len != batch.max_len || target.dim != batch.dim)
          throw Error("target batch shape differs from input");
      }
      const auto valid = batch.valid_mask();
      const double huber = huber_masked(batch.payload, target.payload, valid, batch.dim, p.loss.smooth_l1_beta);
      const auto vc = vicreg_var_cov(batch.payload, valid, batch.dim, p.loss.gamma, p.loss.eps);
      const auto cm = collapse_metrics(batch.payload, valid, batch.dim, derive_seed(seed, "loss-check"));
      double mean_std = 0.0;
      for (double s : cm.std_per_dim) mean_std += s;
      mean_std /= static_cast<double>(std::max<std::size_t>(1, cm.std_per_dim.size()));
      std::cout << fmt::format(
          "smooth_l1:   {:.9g}\nvariance:    {:.9g}\ncovariance:  {:.9g}\ntotal:       {:.9g}\n"
          "mean_std:    {:.9g}\nmean_cosine: {:.9g}\npairs:       {}\n",
          huber, vc.variance, vc.covariance, total_loss(huber, vc.variance, vc.covariance, p.loss.vicreg_beta),
          mean_std, cm.mean_cosine, cm.pairs);
    } else if (eval->parsed()) {
      if (!ev_board.empty()) {
        require_file(ev_board);
        std::ifstream in(ev_board);
        std::cout << format_scoreboard(read_scoreboard_csv(in));
      } else {
        if (ev_pred.empty() || ev_labels.empty()) throw Error("eval needs --scoreboard or --pred with --labels");
        const auto preds = read_label_csv(ev_pred);
        const auto labels = read_label_csv(ev_labels);
        std::vector<double> p, y;
        for (const auto& [id, label] : labels) {
          const auto it = preds.find(id);
          if (it == preds.end()) throw Error(fmt::format("no prediction for tile {}", id));
          p.push_back(it->second);
          y.push_back(label);
        }
        if (!ev_task.empty()) {
          require_file(ev_task);
          const auto spec = load_task_spec(ev_task);
          p = clamp_predictions(p, spec.clamp_lo, spec.clamp_hi);
        }
        std::cout << fmt::format("samples: {}\nmae:     {:.6f}\nmse:     {:.6f}\n", y.size(), mae(p, y), mse(p, y));
        if (!ev_train.empty()) {
          std::vector<double> train;
          for (const auto& [id, v] : read_label_csv(ev_train)) train.push_back(v);
          const double median = dummy_median(train);
          std::vector<double> dummy(y.size(), median);
          std::cout << fmt::format("median:  {:.6f}\ndummy:   {:.6f}\n", median, mae(dummy, y));
        }
      }
    } else if (knn_cmd->parsed()) {
      require_dir(kn_store);
      if (!kn_table.empty()) require_file(kn_table);
      const auto query = parse_tile_id(kn_query);
      const auto tiles = read_store(kn_store);
      const auto table = embeddings_for(tiles, kn_table, kn_dim, seed);
      std::vector<std::string> ids;
      std::vector<std::vector<float>> corpus;
      std::vector<float> q;
      for (const auto& t : tiles) {
        ids.push_back(to_string(t.id));
        corpus.push_back(tagpool_region(t, table));
        if (t.id == query) q = corpus.back();
      }
      if (q.empty()) throw Error(fmt::format("tile {} not in store", kn_query));
      nlohmann::json out = {{"query", to_string(query)}, {"metric", kn_metric}, {"k", kn_k}};
      out["neighbors"] = nlohmann::json::array();
      for (const auto& n : knn(q, ids, corpus, kn_k, parse_metric(kn_metric), to_string(query), jobs))
        out["neighbors"].push_back({{"id", n.id}, {"distance", n.distance}});
      std::cout << out.dump() << "\n";
    } else if (schedule->parsed()) {
      const auto p = preset(sc_preset, sc_steps);
      if (sc_dump) {
        std::cout << schedule_csv(p.schedule);
      } else {
        const auto& s = p.schedule;
        const auto warm = static_cast<std::uint64_t>(std::llround(s.lr_warmup_frac * static_cast<double>(s.total_steps)));
        std::cout << fmt::format(
            "preset:   {}\nbatch:    {}\ngroup:    {}\nlr:       {:g} -> {:g} (step {}) -> {:g}\n"
            "wd:       {:g} -> {:g}\nmomentum: {:g} -> {:g}\nvicreg:   {:g}\nbeta:     {:g}\n",
            p.name, p.batch_size, p.group_size, lr_at(0, s), lr_at(warm, s), warm, lr_at(s.total_steps, s),
            wd_at(0, s), wd_at(s.total_steps, s), momentum_at(0, s), momentum_at(s.total_steps, s),
            p.loss.vicreg_beta, p.loss.smooth_l1_beta);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "geotile: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
