#include "dppsd/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "dppsd/model_io.hpp"
#include "dppsd/parallel.hpp"
#include "json.hpp"

namespace dppsd::bench {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InvalidConfig(key + ": expected a number, got '" + text + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InvalidConfig(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  const auto v = parse_uint(key, text);
  if (v > 1u << 20) throw InvalidConfig(key + ": value too large");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw InvalidConfig(key + ": expected true or false, got '" + text + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

DetectorConfig variant_config(DetectorKind kind, double lambda1, double lambda2, double epsilon_complement) {
  DetectorConfig c;
  switch (kind) {
    case DetectorKind::DppRadius: c = DetectorConfig::radius_only(lambda1); break;
    case DetectorKind::DppOrdering: c = DetectorConfig::ordering_only(); break;
    case DetectorKind::DppOrderingEt: c = DetectorConfig::ordering_with_termination(lambda2); break;
    case DetectorKind::DppFull: c = DetectorConfig::all_schemes(lambda1, lambda2); break;
    default: throw InvalidConfig("not a learning-aided detector");
  }
  c.epsilon_complement = epsilon_complement;
  return c;
}

struct TrialStat {
  std::uint64_t bit_errors = 0;
  std::uint64_t tree_mults = 0, tree_adds = 0;
  std::uint64_t nn_mults = 0, nn_adds = 0;
  std::uint64_t prep_mults = 0, prep_adds = 0;
  std::uint64_t nodes = 0;
  std::uint64_t subtrees = 0;
  std::uint64_t terminated = 0;
  std::uint64_t fallback = 0;
  double wall = 0;
};

struct Accumulator {
  std::uint64_t trials = 0;
  std::uint64_t bits = 0;
  TrialStat sum;

  void add(const TrialStat& s, std::uint64_t bits_per_trial) {
    ++trials;
    bits += bits_per_trial;
    sum.bit_errors += s.bit_errors;
    sum.tree_mults += s.tree_mults;
    sum.tree_adds += s.tree_adds;
    sum.nn_mults += s.nn_mults;
    sum.nn_adds += s.nn_adds;
    sum.prep_mults += s.prep_mults;
    sum.prep_adds += s.prep_adds;
    sum.nodes += s.nodes;
    sum.subtrees += s.subtrees;
    sum.terminated += s.terminated;
    sum.fallback += s.fallback;
    sum.wall += s.wall;
  }

  json to_json() const {
    return json::array({trials, bits, sum.bit_errors, sum.tree_mults, sum.tree_adds, sum.nn_mults, sum.nn_adds,
                        sum.prep_mults, sum.prep_adds, sum.nodes, sum.subtrees, sum.terminated, sum.fallback,
                        sum.wall});
  }

  static Accumulator from_json(const json& j) {
    if (!j.is_array() || j.size() != 14) throw FormatError("accumulators", "bad cell");
    Accumulator a;
    a.trials = j[0].get<std::uint64_t>();
    a.bits = j[1].get<std::uint64_t>();
    a.sum.bit_errors = j[2].get<std::uint64_t>();
    a.sum.tree_mults = j[3].get<std::uint64_t>();
    a.sum.tree_adds = j[4].get<std::uint64_t>();
    a.sum.nn_mults = j[5].get<std::uint64_t>();
    a.sum.nn_adds = j[6].get<std::uint64_t>();
    a.sum.prep_mults = j[7].get<std::uint64_t>();
    a.sum.prep_adds = j[8].get<std::uint64_t>();
    a.sum.nodes = j[9].get<std::uint64_t>();
    a.sum.subtrees = j[10].get<std::uint64_t>();
    a.sum.terminated = j[11].get<std::uint64_t>();
    a.sum.fallback = j[12].get<std::uint64_t>();
    a.sum.wall = j[13].get<double>();
    return a;
  }

  ResultRow row(double snr_db, const std::string& detector) const {
    ResultRow r;
    r.snr_db = snr_db;
    r.detector = detector;
    r.trials = trials;
    r.bit_errors = sum.bit_errors;
    r.bits_simulated = bits;
    const double n = trials ? static_cast<double>(trials) : 1.0;
    r.ber = bits ? static_cast<double>(sum.bit_errors) / static_cast<double>(bits) : 0.0;
    r.avg_tree_mults = static_cast<double>(sum.tree_mults) / n;
    r.avg_tree_adds = static_cast<double>(sum.tree_adds) / n;
    r.avg_nn_mults = static_cast<double>(sum.nn_mults) / n;
    r.avg_nn_adds = static_cast<double>(sum.nn_adds) / n;
    r.avg_prep_mults = static_cast<double>(sum.prep_mults) / n;
    r.avg_prep_adds = static_cast<double>(sum.prep_adds) / n;
    r.avg_nodes_visited = static_cast<double>(sum.nodes) / n;
    r.avg_subtrees_searched = static_cast<double>(sum.subtrees) / n;
    r.early_termination_rate = static_cast<double>(sum.terminated) / n;
    r.fallback_rate = static_cast<double>(sum.fallback) / n;
    r.wall_clock_s = sum.wall;
    return r;
  }
};

std::string fingerprint(const ExperimentSpec& spec, const std::optional<RbfnModel>& model) {
  std::ostringstream s;
  s << "n_t=" << spec.n_t << ";n_r=" << spec.n_r << ";constellation=" << spec.constellation << ";snr=";
  for (double v : spec.snr_grid_db) s << format_double(v) << ',';
  s << ";trials=" << spec.trials_per_point << ";detectors=";
  for (auto d : spec.detectors) s << detector_id(d) << ',';
  s << ";lambda1=" << (spec.lambda1 ? format_double(*spec.lambda1) : "-")
    << ";lambda2=" << (spec.lambda2 ? format_double(*spec.lambda2) : "-")
    << ";schedule=" << spec.lambda_schedule_n_t << ";eps=" << format_double(spec.epsilon_complement)
    << ";seed=" << spec.seed << ";noiseless=" << spec.noiseless << ";block=" << spec.checkpoint_every;
  if (model) s << ";model=" << std::hash<std::string>{}(model_to_json(*model));
  return s.str();
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << doc.dump(1) << '\n';
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

std::filesystem::path with_suffix(const std::filesystem::path& path, const std::string& suffix,
                                  const std::string& extension) {
  auto out = path;
  out.replace_filename(path.stem().string() + suffix + extension);
  return out;
}

}  // namespace

std::string detector_id(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::SeSd: return "se-sd";
    case DetectorKind::SeSdInfinite: return "se-sd-inf";
    case DetectorKind::Ml: return "ml";
    case DetectorKind::DppRadius: return "dpp-radius";
    case DetectorKind::DppOrdering: return "dpp-ordering";
    case DetectorKind::DppOrderingEt: return "dpp-ordering-et";
    case DetectorKind::DppFull: return "dpp-full";
  }
  return "?";
}

DetectorKind parse_detector(const std::string& id) {
  for (auto k : {DetectorKind::SeSd, DetectorKind::SeSdInfinite, DetectorKind::Ml, DetectorKind::DppRadius,
                 DetectorKind::DppOrdering, DetectorKind::DppOrderingEt, DetectorKind::DppFull})
    if (detector_id(k) == id) return k;
  throw InvalidConfig("detectors: unknown detector '" + id + "'");
}

bool needs_model(DetectorKind kind) {
  return kind == DetectorKind::DppRadius || kind == DetectorKind::DppOrdering ||
         kind == DetectorKind::DppOrderingEt || kind == DetectorKind::DppFull;
}

void ExperimentSpec::validate_sweep() const {
  if (n_t < 1) throw InvalidConfig("n_t: must be >= 1");
  if (n_r < n_t) throw InvalidConfig("n_r: must be >= n_t");
  Constellation::by_name(constellation);
  if (snr_grid_db.empty()) throw InvalidConfig("snr_grid_db: must not be empty");
  if (trials_per_point < 1) throw InvalidConfig("trials_per_point: must be >= 1");
  if (detectors.empty()) throw InvalidConfig("detectors: must not be empty");
  if (!(epsilon_complement > 0 && epsilon_complement < 1)) throw InvalidConfig("epsilon_complement: must lie in (0, 1)");
  if (lambda1 && !(*lambda1 >= 1)) throw InvalidConfig("lambda1: must be >= 1");
  if (lambda2 && !(*lambda2 >= 1)) throw InvalidConfig("lambda2: must be >= 1");
  for (auto d : detectors) {
    if (needs_model(d) && model_path.empty())
      throw InvalidConfig("model_path: required by detector " + detector_id(d));
    if (d == DetectorKind::Ml &&
        std::pow(static_cast<double>(Constellation::by_name(constellation).size()), n_t) > kOracleGuard)
      throw InvalidConfig("detectors: ml is limited to |S|^n_t <= 1e7");
  }
}

void ExperimentSpec::validate_dataset() const {
  if (n_t < 1) throw InvalidConfig("n_t: must be >= 1");
  if (n_r < n_t) throw InvalidConfig("n_r: must be >= n_t");
  Constellation::by_name(constellation);
  if (sample_count < 1) throw InvalidConfig("sample_count: must be >= 1");
  if (snr_low_db > snr_high_db) throw InvalidConfig("snr_low_db: must not exceed snr_high_db");
  if (dataset_path.empty()) throw InvalidConfig("dataset_path: required");
}

void apply_setting(ExperimentSpec& spec, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(value);
  if (key == "n_t") spec.n_t = parse_int(key, v);
  else if (key == "n_r") spec.n_r = parse_int(key, v);
  else if (key == "constellation") spec.constellation = v;
  else if (key == "snr_grid_db") {
    spec.snr_grid_db.clear();
    for (const auto& item : split(v, ',')) spec.snr_grid_db.push_back(parse_double(key, item));
  } else if (key == "trials_per_point") spec.trials_per_point = parse_uint(key, v);
  else if (key == "detectors") {
    spec.detectors.clear();
    for (const auto& item : split(v, ',')) spec.detectors.push_back(parse_detector(item));
  } else if (key == "model_path") spec.model_path = v;
  else if (key == "lambda1") spec.lambda1 = parse_double(key, v);
  else if (key == "lambda2") spec.lambda2 = parse_double(key, v);
  else if (key == "lambda_schedule_n_t") spec.lambda_schedule_n_t = parse_int(key, v);
  else if (key == "epsilon_complement") spec.epsilon_complement = parse_double(key, v);
  else if (key == "seed") {
    spec.seed = parse_uint(key, v);
    spec.seed_given = true;
  } else if (key == "output_path") spec.output_path = v;
  else if (key == "checkpoint_every") spec.checkpoint_every = parse_uint(key, v);
  else if (key == "noiseless") spec.noiseless = parse_bool(key, v);
  else if (key == "threads") spec.threads = static_cast<unsigned>(parse_int(key, v));
  else if (key == "sample_count") spec.sample_count = parse_uint(key, v);
  else if (key == "snr_low_db") spec.snr_low_db = parse_double(key, v);
  else if (key == "snr_high_db") spec.snr_high_db = parse_double(key, v);
  else if (key == "dataset_path") spec.dataset_path = v;
  else if (key == "report_path") spec.report_path = v;
  else if (key == "trainer_method") spec.trainer.method = parse_trainer_method(v);
  else if (key == "max_epochs") spec.trainer.max_epochs = parse_int(key, v);
  else if (key == "scg_sigma") spec.trainer.sigma = parse_double(key, v);
  else if (key == "scg_lambda_init") spec.trainer.lambda_init = parse_double(key, v);
  else if (key == "learning_rate") spec.trainer.learning_rate = parse_double(key, v);
  else if (key == "tolerance") spec.trainer.tolerance = parse_double(key, v);
  else if (key == "patience") spec.trainer.patience = parse_int(key, v);
  else if (key == "standardize_inputs") spec.trainer.standardize_inputs = parse_bool(key, v);
  else throw InvalidConfig("unknown setting '" + key + "'");
}

ExperimentSpec parse_config(const std::string& text, ExperimentSpec spec) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig("line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_setting(spec, line.substr(0, eq), line.substr(eq + 1));
  }
  return spec;
}

ExperimentSpec load_config(const std::filesystem::path& path, ExperimentSpec base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

const std::vector<std::string>& result_csv_columns() {
  static const std::vector<std::string> columns = {
      "snr_db",          "detector",          "trials",         "bit_errors",     "bits_simulated",
      "ber",             "avg_tree_mults",    "avg_tree_adds",  "avg_nn_mults",   "avg_nn_adds",
      "avg_prep_mults",  "avg_prep_adds",     "avg_nodes_visited", "avg_subtrees_searched",
      "early_termination_rate", "fallback_rate"};
  return columns;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  const auto& cols = result_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : rows) {
    out << format_double(r.snr_db) << ',' << r.detector << ',' << r.trials << ',' << r.bit_errors << ','
        << r.bits_simulated << ',' << format_double(r.ber) << ',' << format_double(r.avg_tree_mults) << ','
        << format_double(r.avg_tree_adds) << ',' << format_double(r.avg_nn_mults) << ','
        << format_double(r.avg_nn_adds) << ',' << format_double(r.avg_prep_mults) << ','
        << format_double(r.avg_prep_adds) << ',' << format_double(r.avg_nodes_visited) << ','
        << format_double(r.avg_subtrees_searched) << ',' << format_double(r.early_termination_rate) << ','
        << format_double(r.fallback_rate) << '\n';
  }
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_results_csv(out, rows);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  const auto& cols = result_csv_columns();
  std::string line;
  if (!std::getline(in, line)) throw FormatError("header", "empty file");
  if (split(line, ',') != cols) throw FormatError("header", "unexpected columns");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != cols.size()) throw FormatError("row", "expected " + std::to_string(cols.size()) + " fields");
    auto num = [&](std::size_t i) {
      try {
        return parse_double(cols[i], f[i]);
      } catch (const InvalidConfig& e) {
        throw FormatError(cols[i], e.what());
      }
    };
    auto count = [&](std::size_t i) {
      try {
        return parse_uint(cols[i], f[i]);
      } catch (const InvalidConfig& e) {
        throw FormatError(cols[i], e.what());
      }
    };
    ResultRow r;
    r.snr_db = num(0);
    r.detector = f[1];
    r.trials = count(2);
    r.bit_errors = count(3);
    r.bits_simulated = count(4);
    r.ber = num(5);
    r.avg_tree_mults = num(6);
    r.avg_tree_adds = num(7);
    r.avg_nn_mults = num(8);
    r.avg_nn_adds = num(9);
    r.avg_prep_mults = num(10);
    r.avg_prep_adds = num(11);
    r.avg_nodes_visited = num(12);
    r.avg_subtrees_searched = num(13);
    r.early_termination_rate = num(14);
    r.fallback_rate = num(15);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_results_csv(in);
}

void write_results_json(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  json doc = json::array();
  for (const auto& r : rows) {
    doc.push_back({{"snr_db", r.snr_db},
                   {"detector", r.detector},
                   {"trials", r.trials},
                   {"bit_errors", r.bit_errors},
                   {"bits_simulated", r.bits_simulated},
                   {"ber", r.ber},
                   {"avg_tree_mults", r.avg_tree_mults},
                   {"avg_tree_adds", r.avg_tree_adds},
                   {"avg_nn_mults", r.avg_nn_mults},
                   {"avg_nn_adds", r.avg_nn_adds},
                   {"avg_prep_mults", r.avg_prep_mults},
                   {"avg_prep_adds", r.avg_prep_adds},
                   {"avg_nodes_visited", r.avg_nodes_visited},
                   {"avg_subtrees_searched", r.avg_subtrees_searched},
                   {"early_termination_rate", r.early_termination_rate},
                   {"fallback_rate", r.fallback_rate},
                   {"wall_clock_s", r.wall_clock_s}});
  }
  write_json_file(path, doc);
}

std::vector<ComplexityRow> complexity_table(const std::vector<ResultRow>& rows, const std::string& baseline) {
  std::vector<ComplexityRow> out;
  for (const auto& r : rows) {
    const auto base = std::find_if(rows.begin(), rows.end(), [&](const ResultRow& b) {
      return b.detector == baseline && b.snr_db == r.snr_db;
    });
    if (base == rows.end())
      throw InvalidConfig("complexity: no '" + baseline + "' row at " + format_double(r.snr_db) + " dB");
    auto ratio = [](double a, double b) { return b > 0 ? a / b : (a > 0 ? std::numeric_limits<double>::infinity() : 1.0); };
    ComplexityRow c;
    c.snr_db = r.snr_db;
    c.detector = r.detector;
    c.tree_ops = r.avg_tree_ops();
    c.total_ops = r.avg_tree_ops() + r.avg_nn_ops();
    c.ratio_tree = ratio(c.tree_ops, base->avg_tree_ops());
    c.ratio_total = ratio(c.total_ops, base->avg_tree_ops() + base->avg_nn_ops());
    c.ber = r.ber;
    out.push_back(std::move(c));
  }
  return out;
}

void write_complexity_csv(const std::filesystem::path& path, const std::vector<ComplexityRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "snr_db,detector,tree_ops,total_ops,ratio_tree,ratio_total,ber\n";
  for (const auto& c : rows)
    out << format_double(c.snr_db) << ',' << c.detector << ',' << format_double(c.tree_ops) << ','
        << format_double(c.total_ops) << ',' << format_double(c.ratio_tree) << ',' << format_double(c.ratio_total)
        << ',' << format_double(c.ber) << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::pair<double, double> sweep_lambdas(const ExperimentSpec& spec, double snr_db) {
  if (spec.lambda1 && spec.lambda2) return {*spec.lambda1, *spec.lambda2};
  const int schedule_n_t = spec.lambda_schedule_n_t > 0 ? spec.lambda_schedule_n_t : spec.n_t;
  const auto [l1, l2] = LambdaSchedule::qpsk_defaults().lookup(schedule_n_t, snr_db);
  return {spec.lambda1.value_or(l1), spec.lambda2.value_or(l2)};
}

TrialInput draw_trial(const ExperimentSpec& spec, const Constellation& constellation, std::size_t snr_index,
                      std::size_t trial) {
  const double noise = spec.noiseless ? 0.0 : snr_to_noise_variance(spec.snr_grid_db.at(snr_index), spec.n_t);
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = make_rng(spec.seed, {snr_index, trial, attempt});
    TrialInput out;
    out.instance = draw_channel_instance_with_noise(spec.n_t, spec.n_r, constellation, noise, rng);
    try {
      out.front = prepare_receiver(out.instance.y, out.instance.h);
      return out;
    } catch (const RankDeficient&) {
      if (attempt >= 16) throw;
    }
  }
}

SweepResult run_sweep(const ExperimentSpec& spec, const std::optional<RbfnModel>& model, const SweepOptions& options) {
  spec.validate_sweep();
  const Constellation constellation = Constellation::by_name(spec.constellation);
  std::optional<DppDetector> dpp;
  const bool any_dpp = std::any_of(spec.detectors.begin(), spec.detectors.end(), needs_model);
  if (any_dpp) {
    if (!model) throw InvalidConfig("model_path: a model is required by the selected detectors");
    if (model->n_t != spec.n_t || model->constellation_size != constellation.size())
      throw DimensionMismatch("model is for n_t = " + std::to_string(model->n_t) + ", |S| = " +
                              std::to_string(model->constellation_size) + " but the sweep uses n_t = " +
                              std::to_string(spec.n_t) + ", |S| = " + std::to_string(constellation.size()));
    dpp.emplace(*model, constellation);
  }

  const std::size_t n_snr = spec.snr_grid_db.size();
  const std::size_t n_det = spec.detectors.size();
  const std::size_t block = spec.checkpoint_every > 0 ? spec.checkpoint_every : spec.trials_per_point;
  const std::uint64_t bits_per_trial =
      static_cast<std::uint64_t>(spec.n_t) * static_cast<std::uint64_t>(constellation.bits_per_symbol());
  const std::string print = fingerprint(spec, model);

  std::vector<Accumulator> acc(n_snr * n_det);
  std::size_t start_snr = 0;
  std::size_t start_trial = 0;
  const bool checkpointing = !options.checkpoint_path.empty();
  if (checkpointing && std::filesystem::exists(options.checkpoint_path)) {
    std::ifstream in(options.checkpoint_path);
    json doc;
    try {
      doc = json::parse(in);
      if (doc.at("fingerprint").get<std::string>() != print)
        throw InvalidConfig("checkpoint '" + options.checkpoint_path.string() + "' belongs to a different experiment");
      start_snr = doc.at("next_snr").get<std::size_t>();
      start_trial = doc.at("next_trial").get<std::size_t>();
      const json& cells = doc.at("accumulators");
      if (cells.size() != acc.size()) throw FormatError("accumulators", "cell count mismatch");
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = Accumulator::from_json(cells[i]);
    } catch (const json::exception& e) {
      throw FormatError("checkpoint", e.what());
    }
  }

  auto save_checkpoint = [&](std::size_t next_snr, std::size_t next_trial) {
    json cells = json::array();
    for (const auto& a : acc) cells.push_back(a.to_json());
    write_json_file(options.checkpoint_path,
                    {{"fingerprint", print}, {"next_snr", next_snr}, {"next_trial", next_trial}, {"accumulators", cells}});
  };

  std::size_t blocks_done = 0;
  for (std::size_t s = start_snr; s < n_snr; ++s) {
    const double snr = spec.snr_grid_db[s];
    // Noiseless runs keep the receiver configured for the nominal SNR.
    const double detect_noise = snr_to_noise_variance(snr, spec.n_t);
    std::vector<DetectorConfig> configs(n_det);
    if (any_dpp) {
      const auto [l1, l2] = sweep_lambdas(spec, snr);
      for (std::size_t d = 0; d < n_det; ++d)
        if (needs_model(spec.detectors[d]))
          configs[d] = variant_config(spec.detectors[d], l1, l2, spec.epsilon_complement);
    }

    for (std::size_t t0 = (s == start_snr ? start_trial : 0); t0 < spec.trials_per_point; t0 += block) {
      const std::size_t t1 = std::min(spec.trials_per_point, t0 + block);
      std::vector<TrialStat> stats((t1 - t0) * n_det);

      parallel_for(
          t1 - t0,
          [&](std::size_t i) {
            const auto [inst, front] = draw_trial(spec, constellation, s, t0 + i);
            for (std::size_t d = 0; d < n_det; ++d) {
              const auto kind = spec.detectors[d];
              const auto start = std::chrono::steady_clock::now();
              DetectionResult r;
              if (kind == DetectorKind::SeSd || kind == DetectorKind::SeSdInfinite) {
                r = se_detect(front, detect_noise, constellation,
                              kind == DetectorKind::SeSd ? BaselineRadius::Conventional : BaselineRadius::Infinite,
                              spec.epsilon_complement);
              } else if (kind == DetectorKind::Ml) {
                const auto problem = SearchProblem<double>::make(front.z, front.qr.r, constellation);
                r.indices = ml_oracle(problem).indices;
                r.prep_ops = front.ops;
                r.subtrees_searched = constellation.size();
              } else {
                r = dpp->detect(front, detect_noise, configs[d]);
              }
              TrialStat& st = stats[i * n_det + d];
              st.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
              st.bit_errors = bits_diff(r.indices, inst.x_indices, constellation);
              st.tree_mults = r.tree_ops.complex_mults;
              st.tree_adds = r.tree_ops.complex_adds;
              st.nn_mults = r.nn_ops.complex_mults;
              st.nn_adds = r.nn_ops.complex_adds;
              st.prep_mults = r.prep_ops.complex_mults;
              st.prep_adds = r.prep_ops.complex_adds;
              st.nodes = r.nodes_visited;
              st.subtrees = static_cast<std::uint64_t>(r.subtrees_searched);
              st.terminated = r.terminated_early;
              st.fallback = r.used_fallback;
            }
          },
          spec.threads ? spec.threads : default_thread_count());

      for (std::size_t i = 0; i < t1 - t0; ++i)
        for (std::size_t d = 0; d < n_det; ++d) acc[s * n_det + d].add(stats[i * n_det + d], bits_per_trial);

      ++blocks_done;
      if (checkpointing) {
        if (t1 == spec.trials_per_point)
          save_checkpoint(s + 1, 0);
        else
          save_checkpoint(s, t1);
      }
      if (options.stop_after_blocks && blocks_done >= *options.stop_after_blocks &&
          !(s + 1 == n_snr && t1 == spec.trials_per_point))
        return {};
    }
  }

  SweepResult result;
  result.complete = true;
  for (std::size_t s = 0; s < n_snr; ++s)
    for (std::size_t d = 0; d < n_det; ++d)
      result.rows.push_back(acc[s * n_det + d].row(spec.snr_grid_db[s], detector_id(spec.detectors[d])));
  if (checkpointing) std::filesystem::remove(options.checkpoint_path);
  return result;
}

DatasetSummary summarize(const Dataset& dataset) {
  DatasetSummary s;
  s.count = static_cast<std::size_t>(dataset.size());
  if (dataset.targets.size() > 0) {
    s.target_mean = dataset.targets.mean();
    s.target_min = dataset.targets.minCoeff();
    s.target_max = dataset.targets.maxCoeff();
  }
  return s;
}

DatasetSummary cmd_gen_dataset(const ExperimentSpec& spec) {
  spec.validate_dataset();
  DatasetOptions options;
  options.n_t = spec.n_t;
  options.n_r = spec.n_r;
  options.snr_low_db = spec.snr_low_db;
  options.snr_high_db = spec.snr_high_db;
  options.sample_count = spec.sample_count;
  options.seed = spec.seed;
  const Dataset ds = generate_dataset(options, Constellation::by_name(spec.constellation));
  write_dataset(spec.dataset_path, ds);
  return summarize(ds);
}

void write_training_report(const std::filesystem::path& path, const TrainingReport& report,
                           const TrainerConfig& config) {
  write_json_file(path, {{"method", to_string(config.method)},
                         {"seed", config.seed},
                         {"max_epochs", config.max_epochs},
                         {"epochs_run", report.epochs_run},
                         {"final_mse", report.final_mse},
                         {"mse_history", report.mse_history}});
}

TrainingReport cmd_train(const ExperimentSpec& spec) {
  if (spec.dataset_path.empty()) throw InvalidConfig("dataset_path: required");
  if (spec.model_path.empty()) throw InvalidConfig("model_path: required");
  const Dataset ds = read_dataset(spec.dataset_path);
  TrainerConfig config = spec.trainer;
  config.seed = spec.seed;
  auto [model, report] = train(ds, config);
  save_model(model, spec.model_path);
  const std::filesystem::path report_path =
      spec.report_path.empty() ? with_suffix(spec.model_path, "_report", ".json") : std::filesystem::path(spec.report_path);
  write_training_report(report_path, report, config);
  return report;
}

std::filesystem::path checkpoint_path_for(const ExperimentSpec& spec) {
  auto p = std::filesystem::path(spec.output_path);
  p += ".ckpt";
  return p;
}

SweepResult cmd_ber(const ExperimentSpec& spec, const SweepOptions& options) {
  if (spec.output_path.empty()) throw InvalidConfig("output_path: required");
  spec.validate_sweep();
  std::optional<RbfnModel> model;
  if (std::any_of(spec.detectors.begin(), spec.detectors.end(), needs_model)) model = load_model(spec.model_path);
  SweepOptions opts = options;
  if (opts.checkpoint_path.empty() && spec.checkpoint_every > 0) opts.checkpoint_path = checkpoint_path_for(spec);
  SweepResult result = run_sweep(spec, model, opts);
  if (result.complete) {
    write_results_csv(spec.output_path, result.rows);
    write_results_json(with_suffix(spec.output_path, "", ".json"), result.rows);
  }
  return result;
}

std::vector<ComplexityRow> cmd_complexity(const ExperimentSpec& spec, const SweepOptions& options) {
  ExperimentSpec s = spec;
  if (std::find(s.detectors.begin(), s.detectors.end(), DetectorKind::SeSd) == s.detectors.end())
    s.detectors.insert(s.detectors.begin(), DetectorKind::SeSd);
  const SweepResult result = cmd_ber(s, options);
  if (!result.complete) return {};
  auto table = complexity_table(result.rows, "se-sd");
  write_complexity_csv(with_suffix(s.output_path, "_complexity", ".csv"), table);
  return table;
}

}  // namespace dppsd::bench
