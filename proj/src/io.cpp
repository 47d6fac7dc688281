#include "coverage/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "coverage/distribution_checks.hpp"
#include "coverage/errors.hpp"

namespace coverage {

using Json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::optional<std::int64_t> to_int(const std::string& s) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

double require_double(const std::string& key, const std::string& value) {
  const auto v = to_double(value);
  if (!v) throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  return *v;
}

std::int64_t integral_value(const std::string& text) {
  if (auto i = to_int(text)) return *i;
  const auto d = to_double(text);
  if (!d || *d != std::floor(*d) || std::abs(*d) > 9.0e15)
    throw ConfigError("expected an integer, got '" + text + "'");
  return static_cast<std::int64_t>(*d);
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

FrequencyProfile parse_counts(std::istream& in, const std::string& source,
                              std::optional<ProfileMode> mode_override) {
  enum class Format { unknown, raw, profile } format = Format::unknown;
  std::optional<std::int64_t> declared_n;
  FrequencyProfile::Counts table;
  std::vector<std::int64_t> raw;
  std::string line;
  std::int64_t line_no = 0;
  auto fail = [&](const std::string& what) -> ConfigError {
    return ConfigError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.rfind("n=", 0) == 0 || t.rfind("n =", 0) == 0) {
      if (format == Format::raw) throw fail("n header after raw counts");
      if (!table.empty()) throw fail("n header must precede the profile lines");
      if (declared_n) throw fail("duplicate n header");
      const auto v = to_int(trim(t.substr(t.find('=') + 1)));
      if (!v || *v < 1) throw fail("malformed n header '" + t + "'");
      declared_n = *v;
      format = Format::profile;
      continue;
    }
    const auto f = fields(t);
    if (format == Format::unknown) format = f.size() >= 2 ? Format::profile : Format::raw;
    if (format == Format::raw) {
      if (f.size() != 1) throw fail("expected a single count, got '" + t + "'");
      const auto v = to_int(f[0]);
      if (!v) throw fail("malformed count '" + f[0] + "'");
      if (*v < 0) throw fail("negative count " + f[0]);
      raw.push_back(*v);
    } else {
      if (f.size() != 2) throw fail("expected 'j<TAB>F_j', got '" + t + "'");
      const auto j = to_int(f[0]);
      const auto fj = to_int(f[1]);
      if (!j || !fj) throw fail("malformed profile line '" + t + "'");
      if (*j < 1) throw fail("occupancy level must be >= 1");
      if (*fj < 0) throw fail("negative frequency " + f[1]);
      if (table.count(*j)) throw fail("duplicate occupancy level " + f[0]);
      table[*j] = *fj;
    }
  }
  if (format == Format::raw) return profile_from_counts(raw);
  std::int64_t total = 0;
  for (const auto& [j, fj] : table) total += j * fj;
  if (total == 0) throw ConfigError(source + ": no observations");
  const ProfileMode mode =
      mode_override.value_or(declared_n ? ProfileMode::declared : ProfileMode::strict);
  return FrequencyProfile(std::move(table), declared_n.value_or(total), mode);
}

FrequencyProfile parse_counts_file(const std::filesystem::path& path,
                                   std::optional<ProfileMode> mode_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open counts file '" + path.string() + "'");
  return parse_counts(in, path.string(), mode_override);
}

const std::string& tomato_profile_text() {
  static const std::string text =
      "# Tomato flower cDNA library, expressed sequence tags\n"
      "n=2568\n"
      "1\t1434\n2\t253\n3\t71\n4\t33\n5\t11\n6\t6\n7\t2\n8\t3\n9\t1\n10\t1\n11\t1\n"
      "12\t1\n13\t1\n14\t1\n16\t1\n23\t1\n27\t1\n";
  return text;
}

FrequencyProfile tomato_profile() {
  std::istringstream in(tomato_profile_text());
  return parse_counts(in, "tomato-profile");
}

FamilySpec parse_family(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = trim(text.substr(0, colon));
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (name == "explicit") {
    ExplicitFamily f;
    for (const auto& item : split(rest, ',')) f.weights.push_back(require_double("explicit", item));
    if (f.weights.empty()) throw ConfigError("explicit family needs weights");
    return f;
  }
  std::map<std::string, std::string> kv;
  if (!trim(rest).empty()) {
    for (const auto& item : split(rest, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw ConfigError("family parameter '" + item + "' is not key=value");
      const auto key = trim(item.substr(0, eq));
      if (!kv.emplace(key, trim(item.substr(eq + 1))).second)
        throw ConfigError(name + " family: duplicate parameter '" + key + "'");
    }
  }
  auto take = [&](const std::string& key) -> std::optional<double> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    const double v = require_double(key, it->second);
    kv.erase(it);
    return v;
  };
  auto need = [&](const std::string& key) {
    const auto v = take(key);
    if (!v) throw ConfigError(name + " family requires '" + key + "'");
    return *v;
  };
  FamilySpec spec;
  if (name == "pareto") {
    ParetoFamily f;
    f.b = need("b");
    f.a = take("a").value_or(1.0);
    spec = f;
  } else if (name == "exponential") {
    ExponentialFamily f;
    if (const auto a = take("a")) {
      f.scale = *a;
    } else {
      f.scale = need("scale");
      f.power = take("power").value_or(0.0);
    }
    spec = f;
  } else if (name == "uniform") {
    const double k = need("k");
    if (k < 1 || k != std::floor(k)) throw ConfigError("uniform: k must be a positive integer");
    spec = uniform_family(static_cast<std::int64_t>(k));
  } else if (name == "two-step") {
    TwoStepFamily f;
    f.w1 = take("w1").value_or(1.0);
    f.a1 = need("a1");
    f.a2 = take("a2").value_or(0.0);
    spec = f;
  } else if (name == "two-step-case") {
    TwoStepCase f;
    const double c = need("case");
    if (c != 1 && c != 2 && c != 3) throw ConfigError("two-step-case: case must be 1, 2 or 3");
    f.number = static_cast<int>(c);
    f.rate = take("rate");
    spec = f;
  } else {
    throw ConfigError("unknown family '" + name + "'");
  }
  if (!kv.empty()) throw ConfigError(name + " family: unknown parameter '" + kv.begin()->first + "'");
  return spec;
}

std::vector<std::int64_t> parse_n_list(const std::string& text) {
  std::vector<std::int64_t> out;
  for (const auto& item : split(text, ',')) out.push_back(integral_value(item));
  if (out.empty()) throw ConfigError("empty list of sample sizes");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(require_double("list", item));
  if (out.empty()) throw ConfigError("empty numeric list");
  return out;
}

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json estimate_json(const CoverageEstimate& e) {
  Json j;
  j["q_hat"] = e.q_hat;
  j["variance_hat"] = e.variance_hat;
  j["ci_low"] = e.ci_low;
  j["ci_high"] = e.ci_high;
  j["level"] = e.level;
  j["mode"] = to_string(e.mode);
  j["degenerate"] = e.degenerate;
  return j;
}

Json profile_json(const FrequencyProfile& p) {
  Json j;
  j["n"] = p.n();
  j["observed_total"] = p.observed_total();
  j["mode"] = to_string(p.mode());
  Json counts = Json::object();
  for (const auto& [k, v] : p.counts()) counts[std::to_string(k)] = v;
  j["counts"] = counts;
  return j;
}

Json gof_json(const GofResult& g) {
  Json j;
  j["statistic"] = g.statistic;
  j["sample_size"] = g.sample_size;
  j["reference"] = g.reference.describe();
  j["p_value"] = optional_json(g.p_value);
  return j;
}

Json header(const char* command) {
  Json j;
  j["version"] = kVersion;
  j["command"] = command;
  return j;
}

struct Settings {
  VarianceMode variance_mode = VarianceMode::esty;
  OutputFormat format = OutputFormat::json;
  std::optional<FamilySpec> family;
  std::vector<std::int64_t> n_grid;
  std::vector<double> epsilons;
  std::optional<TrendThresholds> thresholds;
};

TrendThresholds parse_thresholds(const std::string& text) {
  TrendThresholds t;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("threshold '" + item + "' is not key=value");
    const std::string key = trim(item.substr(0, eq));
    const double v = require_double(key, trim(item.substr(eq + 1)));
    if (key == "ef1_over_n")
      t.max_ef1_over_n = v;
    else if (key == "mass")
      t.min_ef1_plus_ef2 = v;
    else if (key == "lindeberg")
      t.max_lindeberg = v;
    else if (key == "epsilon")
      t.lindeberg_epsilon = v;
    else
      throw ConfigError("unknown threshold '" + key + "'");
  }
  return t;
}

// Every problem is collected before anything runs.
Settings validate(const RunConfig& c) {
  Settings s;
  std::vector<std::string> problems;
  auto attempt = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  };
  const Command cmd = c.command;
  attempt([&] {
    if (c.format == "json")
      s.format = OutputFormat::json;
    else if (c.format == "csv")
      s.format = OutputFormat::csv;
    else
      throw ConfigError("--format must be json or csv");
  });
  attempt([&] { s.variance_mode = parse_variance_mode(c.variance_mode); });
  if (!(c.level > 0.0 && c.level < 1.0)) problems.push_back("--level must lie in (0,1)");
  if (c.truncation_tolerance && !(*c.truncation_tolerance > 0.0))
    problems.push_back("--tolerance must be positive");
  if (cmd == Command::estimate && c.input.empty())
    problems.push_back("estimate requires --input");
  if (cmd == Command::simulate || cmd == Command::conditions || cmd == Command::model) {
    if (c.family.empty())
      problems.push_back("--family is required");
    else
      attempt([&] { s.family = parse_family(c.family); });
  }
  if (cmd == Command::simulate || cmd == Command::model) {
    if (c.n < 1) problems.push_back("--n must be a positive integer");
  }
  if (cmd == Command::simulate) {
    if (c.replicates < 1) problems.push_back("--replicates must be at least 1");
    if (!c.qq_out.empty() && c.qq_out == c.out)
      problems.push_back("--qq-out must differ from --out");
  }
  if (cmd == Command::conditions) {
    if (c.n_grid.empty())
      problems.push_back("conditions requires --n-grid");
    else
      attempt([&] {
        s.n_grid = parse_n_list(c.n_grid);
        for (std::size_t k = 0; k < s.n_grid.size(); ++k)
          if (s.n_grid[k] < 1 || (k > 0 && s.n_grid[k] <= s.n_grid[k - 1]))
            throw ConfigError("--n-grid must be positive and increasing");
      });
    attempt([&] {
      s.epsilons = c.epsilons.empty() ? kDefaultEpsilons : parse_double_list(c.epsilons);
      for (std::size_t k = 0; k < s.epsilons.size(); ++k)
        if (!(s.epsilons[k] > 0.0) || (k > 0 && s.epsilons[k] <= s.epsilons[k - 1]))
          throw ConfigError("--epsilons must be positive and increasing");
    });
    if (!c.thresholds.empty()) attempt([&] { s.thresholds = parse_thresholds(c.thresholds); });
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw ConfigError(msg);
  }
  return s;
}

void emit(const RunConfig& c, std::ostream& fallback, const std::string& payload,
          const std::string& path_override = {}) {
  const std::string& path = path_override.empty() ? c.out : path_override;
  if (path.empty()) {
    fallback << payload;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open output file '" + path + "'");
  f << payload;
  if (!f) throw Error("failed writing output file '" + path + "'");
}

std::string opt_csv(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

int run_estimate(const RunConfig& c, const Settings& s, std::ostream& out) {
  const auto profile = parse_counts_file(c.input, c.profile_mode);
  const auto est = confidence_interval(profile, c.level, s.variance_mode);
  if (s.format == OutputFormat::csv) {
    std::ostringstream o;
    o << "# version=" << kVersion << "\n# input=" << c.input << '\n';
    for (const auto& w : est.warnings) o << "# warning: " << w << '\n';
    o << "n,q_hat,variance_hat,ci_low,ci_high,level,mode,degenerate\n"
      << profile.n() << ',' << format_double(est.q_hat) << ',' << format_double(est.variance_hat)
      << ',' << format_double(est.ci_low) << ',' << format_double(est.ci_high) << ','
      << format_double(est.level) << ',' << to_string(est.mode) << ','
      << (est.degenerate ? "true" : "false") << '\n';
    emit(c, out, o.str());
    return 0;
  }
  Json j = header("estimate");
  j["config"] = {{"input", c.input},
                 {"level", c.level},
                 {"variance_mode", to_string(s.variance_mode)},
                 {"profile_mode", to_string(profile.mode())}};
  j["profile"] = profile_json(profile);
  j["estimate"] = estimate_json(est);
  j["warnings"] = est.warnings;
  emit(c, out, j.dump(2) + "\n");
  return 0;
}

Json batch_config_json(const ReplicateConfig& rc, double level) {
  Json j;
  j["family"] = describe(rc.family);
  j["n"] = rc.n;
  j["replicates"] = rc.replicates;
  j["seed"] = rc.seed;
  j["coupled"] = rc.coupled;
  j["truncation_tolerance"] = optional_json(rc.truncation_tolerance);
  j["level"] = level;
  return j;
}

int run_simulate(const RunConfig& c, const Settings& s, std::ostream& out) {
  ReplicateConfig rc;
  rc.family = *s.family;
  rc.n = c.n;
  rc.replicates = c.replicates;
  rc.seed = c.seed;
  rc.coupled = c.coupled;
  rc.truncation_tolerance = c.truncation_tolerance;
  rc.threads = c.threads;
  const auto batch = run_replicates(rc);

  Json gof;
  std::vector<double> z_expected;
  auto guarded = [](auto&& fn) -> Json {
    try {
      return fn();
    } catch (const Error& e) {
      return Json{{"error", e.what()}};
    }
  };
  gof["ks_z_expected"] = guarded([&] {
    z_expected = z_values(batch, ZKind::expected);
    return gof_json(ks_normal(z_expected));
  });
  gof["ks_z_empirical"] =
      guarded([&] { return gof_json(ks_normal(z_values(batch, ZKind::empirical))); });
  gof["poisson_f1"] = guarded([&] {
    if (!(batch.expected_f1 > 0.0)) throw Error("E F1 is zero");
    return gof_json(poisson_gof(f1_values(batch), batch.expected_f1));
  });
  gof["ci_coverage"] = guarded([&] {
    const auto cov = ci_coverage_rate(batch, c.level, s.variance_mode);
    return Json{{"coverage", cov.coverage},
                {"evaluated", cov.evaluated},
                {"degenerate_count", cov.degenerate_count},
                {"variance_mode", to_string(s.variance_mode)}};
  });
  gof["relative_error_exceedance_0.1"] = relative_error_exceedance(batch, 0.1);
  gof["degenerate_count"] = batch.degenerate_count;
  gof["note"] = "thresholds applied to these statistics are desk-scale calibrations";

  if (!c.qq_out.empty() && !z_expected.empty()) {
    std::ostringstream q;
    q << "theoretical_quantile,z_expected\n";
    for (const auto& [t, x] : qq_points(z_expected))
      q << format_double(t) << ',' << format_double(x) << '\n';
    emit(c, out, q.str(), c.qq_out);
  }

  Json model;
  model["kept_atoms"] = batch.kept_atoms;
  model["tail_mass_bound"] = batch.tail_mass_bound;
  model["underflow_warnings"] = batch.underflow_warnings;
  Json expected;
  expected["f1"] = batch.expected_f1;
  expected["f2"] = batch.expected_f2;
  expected["denominator"] = batch.expected_denominator;
  expected["s_n"] = batch.s_n;

  if (s.format == OutputFormat::csv) {
    std::ostringstream o;
    o << "# version=" << kVersion << '\n'
      << "# config=" << batch_config_json(rc, c.level).dump() << '\n'
      << "# model=" << model.dump() << '\n'
      << "# expected=" << expected.dump() << '\n'
      << "# gof=" << gof.dump() << '\n'
      << "index,q_true,q_hat,f1,f2,xi,zeta,poisson_total,z_empirical,z_expected,degenerate\n";
    for (const auto& r : batch.records) {
      o << r.index << ',' << format_double(r.q_true) << ',' << format_double(r.q_hat) << ','
        << r.f1 << ',' << r.f2 << ',' << format_double(r.xi) << ',' << opt_csv(r.zeta) << ','
        << (r.poisson_total ? std::to_string(*r.poisson_total) : "") << ','
        << opt_csv(r.z_empirical) << ',' << opt_csv(r.z_expected) << ','
        << (r.degenerate ? "true" : "false") << '\n';
    }
    emit(c, out, o.str());
    return 0;
  }
  Json j = header("simulate");
  j["config"] = batch_config_json(rc, c.level);
  j["model"] = model;
  j["expected"] = expected;
  j["gof"] = gof;
  Json rows = Json::array();
  for (const auto& r : batch.records) {
    Json row;
    row["index"] = r.index;
    row["q_true"] = r.q_true;
    row["q_hat"] = r.q_hat;
    row["f1"] = r.f1;
    row["f2"] = r.f2;
    row["xi"] = r.xi;
    row["zeta"] = optional_json(r.zeta);
    row["poisson_total"] = r.poisson_total ? Json(*r.poisson_total) : Json(nullptr);
    row["z_empirical"] = optional_json(r.z_empirical);
    row["z_expected"] = optional_json(r.z_expected);
    row["degenerate"] = r.degenerate;
    rows.push_back(std::move(row));
  }
  j["replicates"] = std::move(rows);
  emit(c, out, j.dump(2) + "\n");
  return 0;
}

int run_conditions(const RunConfig& c, const Settings& s, std::ostream& out) {
  BuildOptions options;
  options.truncation_tolerance = c.truncation_tolerance;
  const auto report = condition_report(*s.family, s.n_grid, s.epsilons, options);
  if (s.format == OutputFormat::csv) {
    std::ostringstream o;
    o << "# version=" << kVersion << "\n# family=" << report.family
      << "\n# epsilon grid is a finite surrogate for 'all epsilon > 0'\n"
      << "n,kept_atoms,tail_mass_bound,ef1,ef2,ef1_over_n,ef2_over_n,ef1_plus_ef2,"
         "ef1_plus_2ef2,s_sq,s_over_log_n";
    for (double e : report.epsilons) o << ",lindeberg_" << e;
    o << '\n';
    for (const auto& r : report.rows) {
      o << r.n << ',' << r.kept_atoms << ',' << format_double(r.tail_mass_bound) << ','
        << format_double(r.ef1) << ',' << format_double(r.ef2) << ','
        << format_double(r.ef1_over_n) << ',' << format_double(r.ef2_over_n) << ','
        << format_double(r.ef1_plus_ef2) << ',' << format_double(r.ef1_plus_2ef2) << ','
        << format_double(r.s_sq) << ',' << format_double(r.s_over_log_n);
      for (double v : r.lindeberg) o << ',' << format_double(v);
      o << '\n';
    }
    emit(c, out, o.str());
    return 0;
  }
  Json j = header("conditions");
  j["config"] = {{"family", report.family},
                 {"n_grid", s.n_grid},
                 {"epsilons", s.epsilons},
                 {"truncation_tolerance", optional_json(c.truncation_tolerance)}};
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json row;
    row["n"] = r.n;
    row["kept_atoms"] = r.kept_atoms;
    row["tail_mass_bound"] = r.tail_mass_bound;
    row["ef1"] = r.ef1;
    row["ef2"] = r.ef2;
    row["ef1_over_n"] = r.ef1_over_n;
    row["ef2_over_n"] = r.ef2_over_n;
    row["ef1_plus_ef2"] = r.ef1_plus_ef2;
    row["ef1_plus_2ef2"] = r.ef1_plus_2ef2;
    row["s_sq"] = r.s_sq;
    row["s_over_log_n"] = std::isfinite(r.s_over_log_n) ? Json(r.s_over_log_n) : Json(nullptr);
    Json lind = Json::array();
    for (std::size_t k = 0; k < report.epsilons.size(); ++k)
      lind.push_back({{"epsilon", report.epsilons[k]}, {"value", r.lindeberg[k]}});
    row["lindeberg"] = std::move(lind);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  Json trends;
  trends["ef1_over_n"] = to_string(trend(report, &ConditionRow::ef1_over_n));
  trends["ef2_over_n"] = to_string(trend(report, &ConditionRow::ef2_over_n));
  trends["ef1_plus_ef2"] = to_string(trend(report, &ConditionRow::ef1_plus_ef2));
  trends["s_sq"] = to_string(trend(report, &ConditionRow::s_sq));
  Json lt = Json::array();
  for (std::size_t k = 0; k < report.epsilons.size(); ++k)
    lt.push_back({{"epsilon", report.epsilons[k]}, {"trend", to_string(lindeberg_trend(report, k))}});
  trends["lindeberg"] = std::move(lt);
  j["trends"] = std::move(trends);
  j["note"] =
      "finite-n values only; limits are not inferred and the epsilon grid is a finite surrogate";
  if (s.thresholds) {
    const auto h = classify(report, *s.thresholds);
    j["heuristic_classification"] = {
        {"label", "heuristic: user thresholds applied at the largest n"},
        {"max_ef1_over_n", s.thresholds->max_ef1_over_n},
        {"min_ef1_plus_ef2", s.thresholds->min_ef1_plus_ef2},
        {"max_lindeberg", s.thresholds->max_lindeberg},
        {"lindeberg_epsilon", s.thresholds->lindeberg_epsilon},
        {"ef1_fraction_ok", h.ef1_fraction_ok},
        {"mass_large", h.mass_large},
        {"lindeberg_small", h.lindeberg_small}};
  }
  emit(c, out, j.dump(2) + "\n");
  return 0;
}

int run_tomato(const RunConfig& c, const Settings& s, std::ostream& out) {
  const auto profile = tomato_profile();
  const auto esty = confidence_interval(profile, c.level, VarianceMode::esty);
  const auto f1 = confidence_interval(profile, c.level, VarianceMode::f1_only);
  const std::string discrepancy =
      "the published interval matches the f1-only variance; the esty variance "
      "F1(1-F1/n)+2F2 gives a wider interval";
  if (s.format == OutputFormat::csv) {
    std::ostringstream o;
    o << "# version=" << kVersion << '\n';
    for (const auto& w : profile.warnings()) o << "# warning: " << w << '\n';
    o << "# note: " << discrepancy << '\n'
      << "source,q_hat,ci_low,ci_high\n"
      << "esty," << format_double(esty.q_hat) << ',' << format_double(esty.ci_low) << ','
      << format_double(esty.ci_high) << '\n'
      << "f1-only," << format_double(f1.q_hat) << ',' << format_double(f1.ci_low) << ','
      << format_double(f1.ci_high) << '\n'
      << "published,0.5584," << format_double(kTomatoPublishedLow) << ','
      << format_double(kTomatoPublishedHigh) << '\n';
    emit(c, out, o.str());
    return 0;
  }
  Json j = header("reproduce-example4");
  j["config"] = {{"level", c.level}};
  j["profile"] = profile_json(profile);
  j["q_hat"] = esty.q_hat;
  j["esty"] = estimate_json(esty);
  j["f1_only"] = estimate_json(f1);
  j["published"] = {{"q_hat", 0.5584},
                    {"ci_low", kTomatoPublishedLow},
                    {"ci_high", kTomatoPublishedHigh},
                    {"level", 0.95}};
  j["f1_only_minus_published"] = {{"low", f1.ci_low - kTomatoPublishedLow},
                                  {"high", f1.ci_high - kTomatoPublishedHigh}};
  j["esty_minus_published"] = {{"low", esty.ci_low - kTomatoPublishedLow},
                               {"high", esty.ci_high - kTomatoPublishedHigh}};
  j["discrepancy"] = discrepancy;
  j["warnings"] = profile.warnings();
  emit(c, out, j.dump(2) + "\n");
  return 0;
}

int run_model(const RunConfig& c, const Settings& s, std::ostream& out) {
  BuildOptions options;
  options.truncation_tolerance = c.truncation_tolerance;
  const auto model = build_model(*s.family, c.n, options);
  std::ostringstream o;
  o << "# version=" << kVersion << "\n# n=" << c.n << '\n';
  write_model_table(o, model);
  emit(c, out, o.str());
  return 0;
}

void write_error(std::ostream& err, const char* kind, const std::string& message) {
  Json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"version", kVersion}};
  err << j.dump() << '\n';
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const Settings s = validate(config);
    switch (config.command) {
      case Command::estimate: return run_estimate(config, s, out);
      case Command::simulate: return run_simulate(config, s, out);
      case Command::conditions: return run_conditions(config, s, out);
      case Command::reproduce_tomato: return run_tomato(config, s, out);
      case Command::model: return run_model(config, s, out);
    }
    return 1;
  } catch (const ConfigError& e) {
    write_error(err, "usage", e.what());
    return 1;
  } catch (const std::exception& e) {
    write_error(err, "computation", e.what());
    return 2;
  }
}

}  // namespace coverage
