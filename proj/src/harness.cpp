#include "chordbench/harness.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "chordbench/error.h"
#include "chordbench/metrics.h"
#include "chordbench/rng.h"

namespace chordbench {

namespace fs = std::filesystem;

int FoldPlan::fold_of(const SongEntry& entry) const {
  auto it = fold_of_song.find(entry.song_id);
  if (it == fold_of_song.end()) throw InvalidArgument("song '" + entry.song_id + "' is not in the fold plan");
  return it->second;
}

std::vector<std::string> FoldPlan::songs_in_fold(int fold) const {
  std::vector<std::string> out;
  for (const auto& [song, f] : fold_of_song) {
    if (f == fold) out.push_back(song);
  }
  return out;
}

FoldPlan make_folds(std::span<const SongEntry> songs, std::uint64_t seed, FoldOrder order, int k) {
  if (k < 2) throw InvalidArgument("make_folds: need at least 2 folds");
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> ids;
  for (const auto& s : songs) {
    if (!seen.insert({s.song_id, s.performance_id}).second) {
      throw InvalidArgument("make_folds: duplicate entry for song '" + s.song_id + "' performance '" +
                            s.performance_id + "'");
    }
    ids.insert(s.song_id);
  }
  if (ids.size() < static_cast<std::size_t>(k)) {
    throw InvalidArgument("make_folds: " + std::to_string(ids.size()) + " distinct songs, need at least " +
                          std::to_string(k));
  }
  std::vector<std::string> sorted(ids.begin(), ids.end());
  if (order == FoldOrder::kShuffled) {
    Rng rng(seed);
    rng.shuffle(std::span<std::string>(sorted));
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  const std::size_t n = sorted.size();
  for (int f = 0; f < k; ++f) {
    const std::size_t begin = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(k);
    const std::size_t end = n * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(k);
    for (std::size_t i = begin; i < end; ++i) plan.fold_of_song[sorted[i]] = f;
  }
  return plan;
}

std::map<std::string, std::vector<SongEntry>> balance_datasets(
    const std::map<std::string, std::vector<SongEntry>>& datasets, std::uint64_t seed, std::size_t quota) {
  if (quota == 0) throw InvalidArgument("balance_datasets: quota must be positive");
  std::map<std::string, std::vector<SongEntry>> out;
  for (const auto& [name, entries] : datasets) {
    if (entries.empty()) throw InvalidArgument("balance_datasets: dataset '" + name + "' is empty");
    Rng rng(derive_seed(seed, fnv1a(name)));
    std::vector<SongEntry>& dst = out[name];
    const std::size_t n = entries.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (n >= quota) {
      rng.shuffle(std::span<std::size_t>(order));
      order.resize(quota);
      std::sort(order.begin(), order.end());
      for (auto i : order) dst.push_back(entries[i]);
      continue;
    }
    for (std::size_t r = 0; r < quota / n; ++r) dst.insert(dst.end(), entries.begin(), entries.end());
    const std::size_t rest = quota % n;
    if (rest > 0) {
      rng.shuffle(std::span<std::size_t>(order));
      order.resize(rest);
      std::sort(order.begin(), order.end());
      for (auto i : order) dst.push_back(entries[i]);
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (model == ModelKind::kLabeler && train_datasets.empty()) {
    throw InvalidArgument("experiment " + std::to_string(id) + ": a trained model needs training datasets");
  }
  if (eval_datasets.empty()) throw InvalidArgument("experiment " + std::to_string(id) + ": no evaluation datasets");
  if (folds < 2) throw InvalidArgument("experiment " + std::to_string(id) + ": need at least 2 folds");
  if (quota == 0) throw InvalidArgument("experiment " + std::to_string(id) + ": quota must be positive");
  labeler.validate();
}

void apply_labeler_settings(const ConfigSection& s, LabelerConfig& c) {
  s.require_known({"input_dim", "model_dim", "layers", "heads", "ff_dim", "context_frames", "seed"});
  auto size = [&](std::string_view key, std::size_t fallback) {
    const std::int64_t v = s.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 1) throw ParseError("section [" + s.name + "]: '" + std::string(key) + "' must be at least 1");
    return static_cast<std::size_t>(v);
  };
  c.input_dim = size("input_dim", c.input_dim);
  c.model_dim = size("model_dim", c.model_dim);
  c.n_layers = size("layers", c.n_layers);
  c.n_heads = size("heads", c.n_heads);
  c.ff_dim = size("ff_dim", c.ff_dim);
  c.context_frames = size("context_frames", c.context_frames);
  c.seed = static_cast<std::uint64_t>(s.get_int("seed", static_cast<std::int64_t>(c.seed)));
}

void apply_training_settings(const ConfigSection& s, TrainHyperparams& h) {
  s.require_known({"learning_rate", "batch_size", "max_epochs", "patience", "target_accuracy"});
  h.learning_rate = s.get_double("learning_rate", h.learning_rate);
  const auto positive = [&](std::string_view key, std::size_t fallback, std::int64_t min) {
    const std::int64_t v = s.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < min) throw ParseError("section [" + s.name + "]: '" + std::string(key) + "' is out of range");
    return static_cast<std::size_t>(v);
  };
  h.batch_size = positive("batch_size", h.batch_size, 1);
  h.max_epochs = positive("max_epochs", h.max_epochs, 1);
  h.patience = positive("patience", h.patience, 0);
  h.target_accuracy = s.get_double("target_accuracy", h.target_accuracy);
  if (!(h.learning_rate > 0.0)) throw ParseError("section [" + s.name + "]: learning_rate must be positive");
}

namespace {

const std::vector<std::string_view> kExperimentKeys = {"description", "train", "model", "eval", "balance", "quota",
                                                       "seed", "folds", "fold_order", "augment"};

void apply_experiment_keys(const ConfigSection& s, ExperimentConfig& e) {
  s.require_known(kExperimentKeys);
  e.description = s.get_string("description", e.description);
  e.train_datasets = s.get_list("train", e.train_datasets);
  e.eval_datasets = s.get_list("eval", e.eval_datasets);
  if (s.has("model")) {
    const std::string m = s.get_string("model");
    if (m == "template") {
      e.model = ModelKind::kTemplate;
    } else if (m == "labeler") {
      e.model = ModelKind::kLabeler;
    } else {
      throw ParseError("section [" + s.name + "]: unknown model '" + m + "'");
    }
  }
  e.balance = s.get_bool("balance", e.balance);
  const std::int64_t quota = s.get_int("quota", static_cast<std::int64_t>(e.quota));
  if (quota < 1) throw ParseError("section [" + s.name + "]: quota must be positive");
  e.quota = static_cast<std::size_t>(quota);
  e.seed = static_cast<std::uint64_t>(s.get_int("seed", static_cast<std::int64_t>(e.seed)));
  e.folds = static_cast<int>(s.get_int("folds", e.folds));
  if (s.has("fold_order")) {
    const std::string o = s.get_string("fold_order");
    if (o == "shuffled") {
      e.fold_order = FoldOrder::kShuffled;
    } else if (o == "contiguous") {
      e.fold_order = FoldOrder::kContiguous;
    } else {
      throw ParseError("section [" + s.name + "]: fold_order must be shuffled or contiguous");
    }
  }
  e.augment = s.get_bool("augment", e.augment);
}

}  // namespace

std::vector<ExperimentConfig> parse_experiments(const ConfigFile& file) {
  ExperimentConfig base;
  if (const auto* s = file.find("defaults")) apply_experiment_keys(*s, base);
  if (const auto* s = file.find("labeler")) apply_labeler_settings(*s, base.labeler);
  if (const auto* s = file.find("training")) apply_training_settings(*s, base.training);
  if (!file.sections.front().entries.empty()) {
    throw ParseError(file.source + ":" + std::to_string(file.sections.front().entries.front().line) +
                     ": keys must sit inside a section");
  }

  std::vector<ExperimentConfig> out;
  std::set<int> ids;
  constexpr std::string_view kPrefix = "experiment.";
  for (const auto& s : file.sections) {
    if (s.name.empty() || s.name == "defaults" || s.name == "labeler" || s.name == "training") continue;
    if (!s.name.starts_with(kPrefix)) {
      throw ParseError(file.source + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
    const std::string id_text = s.name.substr(kPrefix.size());
    int id = 0;
    auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc() || ptr != id_text.data() + id_text.size() || id < 0) {
      throw ParseError(file.source + ":" + std::to_string(s.line) + ": bad experiment id '" + id_text + "'");
    }
    if (!ids.insert(id).second) {
      throw ParseError(file.source + ":" + std::to_string(s.line) + ": duplicate experiment " + id_text);
    }
    ExperimentConfig e = base;
    e.id = id;
    apply_experiment_keys(s, e);
    try {
      e.validate();
    } catch (const InvalidArgument& err) {
      throw ParseError(file.source + ":" + std::to_string(s.line) + ": " + err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

const std::vector<std::string>& harness_metrics() {
  static const std::vector<std::string> kMetrics = {"root", "majmin", "ccm"};
  return kMetrics;
}

double round_percent(double value) { return std::round(value * 100.0) / 100.0; }

std::vector<ResultRow> summarize(std::span<const ResultRow> fold_rows) {
  struct Group {
    ResultRow key;
    std::vector<double> values;
  };
  std::vector<Group> groups;
  for (const auto& r : fold_rows) {
    if (r.fold == kSummaryFold) continue;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.key.experiment == r.experiment && g.key.dataset == r.dataset && g.key.metric == r.metric;
    });
    if (it == groups.end()) {
      groups.push_back({r, {}});
      it = groups.end() - 1;
    }
    it->values.push_back(r.mean);
  }
  std::vector<ResultRow> out;
  for (const auto& g : groups) {
    double mean = 0.0;
    for (double v : g.values) mean += v;
    mean /= static_cast<double>(g.values.size());
    double var = 0.0;
    for (double v : g.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(g.values.size());
    ResultRow row = g.key;
    row.fold = kSummaryFold;
    row.mean = round_percent(mean);
    row.std = round_percent(std::sqrt(var));
    out.push_back(row);
  }
  return out;
}

namespace {

std::string entry_key(const SongEntry& e) { return e.dataset + "\x1f" + e.song_id + "\x1f" + e.performance_id; }

// Loads each distinct recording once per fold.
class TrackLoader {
 public:
  explicit TrackLoader(Pipeline& pipeline) : pipeline_(pipeline) {}
  const TrackData& get(const SongEntry& entry) {
    const std::string key = entry_key(entry);
    auto it = tracks_.find(key);
    if (it == tracks_.end()) it = tracks_.emplace(key, pipeline_.load(entry)).first;
    return it->second;
  }

 private:
  Pipeline& pipeline_;
  std::map<std::string, TrackData> tracks_;
};

std::vector<ResultRow> run_fold(const ExperimentConfig& config, Pipeline& pipeline, int fold,
                                const std::map<std::string, FoldPlan>& plans,
                                const std::map<std::string, std::vector<SongEntry>>& songs,
                                const std::map<std::string, std::vector<SongEntry>>& train_pools,
                                const std::optional<fs::path>& fold_dir) {
  TrackLoader loader(pipeline);
  auto recognizer = pipeline.make_recognizer(config);
  if (config.model == ModelKind::kLabeler) {
    std::vector<TrackData> training;
    for (const auto& name : config.train_datasets) {
      const FoldPlan& plan = plans.at(name);
      for (const auto& entry : train_pools.at(name)) {
        if (plan.fold_of(entry) != fold) training.push_back(loader.get(entry));
      }
    }
    if (training.empty()) throw InvalidArgument("no training recordings");
    recognizer->fit(training);
  }

  std::vector<ChordMetric> metrics;
  for (const auto& m : harness_metrics()) metrics.push_back(metric_by_name(m));
  std::vector<ResultRow> rows;
  for (const auto& name : config.eval_datasets) {
    const FoldPlan& plan = plans.at(name);
    std::vector<std::vector<TrackScore>> scores(metrics.size());
    for (const auto& entry : songs.at(name)) {
      if (plan.fold_of(entry) != fold) continue;
      const TrackData& track = loader.get(entry);
      const SegmentTrack predicted = recognizer->predict(track);
      for (std::size_t m = 0; m < metrics.size(); ++m) {
        scores[m].push_back(weighted_score(track.reference, predicted, metrics[m]));
      }
    }
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      const double value = scores[m].empty() ? 0.0 : aggregate_fold(scores[m]);
      rows.push_back({config.id, name, metrics[m].name, fold, round_percent(100.0 * value), 0.0});
    }
  }
  if (fold_dir) recognizer->save(*fold_dir);
  return rows;
}

void write_atomically(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, contents);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::vector<ResultRow> read_completed_fold(const fs::path& path, const ExperimentConfig& config, int fold) {
  auto rows = parse_results_csv(read_text_file(path));
  const std::size_t expected = config.eval_datasets.size() * harness_metrics().size();
  bool ok = rows.size() == expected;
  for (const auto& r : rows) {
    ok = ok && r.experiment == config.id && r.fold == fold &&
         std::find(config.eval_datasets.begin(), config.eval_datasets.end(), r.dataset) != config.eval_datasets.end();
  }
  if (!ok) throw ParseError(path.string() + ": does not match experiment " + std::to_string(config.id) + " fold " +
                            std::to_string(fold) + "; remove it to recompute");
  return rows;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, Pipeline& pipeline,
                                      const std::optional<fs::path>& out_dir) {
  config.validate();
  const std::string context = "experiment " + std::to_string(config.id);

  std::map<std::string, std::vector<SongEntry>> songs;
  std::map<std::string, FoldPlan> plans;
  try {
    for (const auto* list : {&config.train_datasets, &config.eval_datasets}) {
      for (const auto& name : *list) {
        if (songs.count(name)) continue;
        songs[name] = pipeline.songs(name);
        plans[name] = make_folds(songs[name], derive_seed(config.seed, fnv1a(name)), config.fold_order, config.folds);
      }
    }
  } catch (const Error& e) {
    throw Error(context + ": " + e.what());
  }

  std::map<std::string, std::vector<SongEntry>> train_pools;
  for (const auto& name : config.train_datasets) train_pools[name] = songs[name];
  if (config.balance && !train_pools.empty()) train_pools = balance_datasets(train_pools, config.seed, config.quota);

  std::vector<ResultRow> rows;
  for (int fold = 0; fold < config.folds; ++fold) {
    std::optional<fs::path> fold_dir;
    if (out_dir) fold_dir = *out_dir / std::to_string(config.id) / std::to_string(fold);
    std::vector<ResultRow> fold_rows;
    try {
      const fs::path scores = fold_dir ? *fold_dir / "scores.csv" : fs::path{};
      if (fold_dir && fs::exists(scores)) {
        fold_rows = read_completed_fold(scores, config, fold);
      } else {
        if (fold_dir) {
          std::error_code ec;
          fs::create_directories(*fold_dir, ec);
          if (ec) throw IoError("cannot create " + fold_dir->string() + ": " + ec.message());
        }
        fold_rows = run_fold(config, pipeline, fold, plans, songs, train_pools, fold_dir);
        if (fold_dir) write_atomically(scores, format_results_csv(fold_rows));
      }
    } catch (const Error& e) {
      throw Error(context + ", fold " + std::to_string(fold) + ": " + e.what());
    }
    rows.insert(rows.end(), fold_rows.begin(), fold_rows.end());
  }
  const auto summary = summarize(rows);
  rows.insert(rows.end(), summary.begin(), summary.end());
  return rows;
}

std::string format_results_csv(std::span<const ResultRow> rows) {
  std::string out = "experiment,dataset,metric,fold,mean,std\n";
  char buf[64];
  for (const auto& r : rows) {
    out += std::to_string(r.experiment) + "," + r.dataset + "," + r.metric + ",";
    out += r.fold == kSummaryFold ? std::string("summary") : std::to_string(r.fold);
    std::snprintf(buf, sizeof buf, ",%.2f,%.2f\n", r.mean, r.std);
    out += buf;
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  int line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != "experiment,dataset,metric,fold,mean,std") {
        throw ParseError("results line " + std::to_string(line_no) + ": unexpected header");
      }
      header = false;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const auto bad = [&](const std::string& what) {
      return ParseError("results line " + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != 6) throw bad("expected 6 fields");
    ResultRow r;
    auto parse_int = [&](std::string_view f, int& v) {
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size()) throw bad("bad integer '" + std::string(f) + "'");
    };
    auto parse_real = [&](std::string_view f, double& v) {
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size()) throw bad("bad number '" + std::string(f) + "'");
    };
    parse_int(fields[0], r.experiment);
    r.dataset = fields[1];
    r.metric = fields[2];
    if (fields[3] == "summary") {
      r.fold = kSummaryFold;
    } else {
      parse_int(fields[3], r.fold);
    }
    parse_real(fields[4], r.mean);
    parse_real(fields[5], r.std);
    rows.push_back(std::move(r));
  }
  if (header) throw ParseError("results: missing header");
  return rows;
}

namespace {

std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  const std::string fill(width - std::min(width, display_width(s)), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

std::string format_report_table(std::span<const ResultRow> rows) {
  std::vector<std::pair<std::string, std::string>> columns;
  std::vector<int> experiments;
  for (const auto& r : rows) {
    if (r.fold != kSummaryFold) continue;
    const std::pair<std::string, std::string> col{r.dataset, r.metric};
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (std::find(experiments.begin(), experiments.end(), r.experiment) == experiments.end()) {
      experiments.push_back(r.experiment);
    }
  }
  if (columns.empty()) throw InvalidArgument("format_report_table: no summary rows");

  auto find = [&](int exp, const std::pair<std::string, std::string>& col) -> const ResultRow* {
    for (const auto& r : rows) {
      if (r.fold == kSummaryFold && r.experiment == exp && r.dataset == col.first && r.metric == col.second) return &r;
    }
    return nullptr;
  };

  std::vector<std::vector<std::string>> grid;
  grid.push_back({"experiment"});
  for (const auto& c : columns) grid[0].push_back(c.first + " " + c.second);
  for (int exp : experiments) grid.push_back({std::to_string(exp)});
  char buf[64];
  for (std::size_t c = 0; c < columns.size(); ++c) {
    double best = -1.0;
    for (int exp : experiments) {
      if (const auto* r = find(exp, columns[c])) best = std::max(best, r->mean);
    }
    for (std::size_t e = 0; e < experiments.size(); ++e) {
      const auto* r = find(experiments[e], columns[c]);
      if (!r) {
        grid[e + 1].push_back("-");
        continue;
      }
      std::snprintf(buf, sizeof buf, "%.2f \xC2\xB1 %.2f%s", r->mean, r->std, r->mean == best ? " *" : "  ");
      grid[e + 1].push_back(buf);
    }
  }

  std::vector<std::size_t> widths(grid[0].size(), 0);
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], display_width(row[c]));
  }
  std::string out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      if (c > 0) out += "  ";
      out += pad(grid[r][c], widths[c], c == 0);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w;
      out += std::string(total + 2 * (widths.size() - 1), '-') + '\n';
    }
  }
  out += "* highest mean in column\n";
  return out;
}

void emit_report(std::span<const ResultRow> rows, const fs::path& dir) {
  if (rows.empty()) throw InvalidArgument("emit_report: no rows");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<ResultRow> summary;
  for (const auto& r : rows) {
    if (r.fold == kSummaryFold) summary.push_back(r);
  }
  if (summary.empty()) summary = summarize(rows);
  write_text_file(dir / "summary.csv", format_results_csv(summary));
  write_text_file(dir / "summary.txt", format_report_table(summary));
}

}  // namespace chordbench
