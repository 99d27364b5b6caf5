#include "nlsparse/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace nlsparse {

using nlohmann::json;

namespace {

const char* kOptionalSections[] = {"sweep", "rate_study"};

void merge_into(json& target, const json& source, const std::string& path) {
  for (auto it = source.begin(); it != source.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!target.contains(it.key())) throw SpecError("unknown spec key '" + key + "'");
    json& slot = target[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      merge_into(slot, it.value(), key);
    } else if (slot.is_object()) {
      throw SpecError("spec key '" + key + "' must be an object");
    } else {
      slot = it.value();
    }
  }
}

json::json_pointer pointer_for(const std::string& dotted) {
  std::string ptr;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? dotted.npos : dot - start);
    if (part.empty()) throw SpecError("malformed key '" + dotted + "'");
    ptr += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return json::json_pointer(ptr);
}

void set_existing(json& doc, const std::string& key, const json& value) {
  const auto ptr = pointer_for(key);
  if (!doc.contains(ptr)) throw SpecError("unknown spec key '" + key + "'");
  doc[ptr] = value;
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

template <typename T>
T get_as(const json& doc, const char* section, const char* key) {
  const json& node = section ? doc.at(section).at(key) : doc.at(key);
  try {
    return node.get<T>();
  } catch (const json::exception&) {
    const std::string name = section ? std::string(section) + "." + key : std::string(key);
    throw SpecError("spec key '" + name + "' has the wrong type: " + node.dump());
  }
}

StepRule step_from_json(const json& node) {
  if (node.is_number()) return StepRule::fixed(node.get<double>());
  if (node.is_object() && node.size() == 1 && node.contains("line_search")) {
    const json& grid = node.at("line_search");
    if (!grid.is_number_integer()) throw SpecError("solver.step.line_search must be an integer");
    return StepRule::line_search(grid.get<int>());
  }
  throw SpecError("solver.step must be a number or {\"line_search\": N}, got " + node.dump());
}

json step_to_json(const StepRule& step) {
  if (step.kind == StepRule::Kind::fixed) return step.step;
  return json{{"line_search", step.grid_points}};
}

json double_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json signal_to_json(const Signal& x) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) arr.push_back(double_or_null(x[i]));
  return arr;
}

json trace_to_json(const SolverTrace& trace) {
  json cols = {{"k", json::array()},       {"objective", json::array()},
               {"residual", json::array()}, {"gap", json::array()},
               {"support", json::array()},  {"step", json::array()}};
  for (const auto& r : trace.records) {
    cols["k"].push_back(r.k);
    cols["objective"].push_back(double_or_null(r.objective));
    cols["residual"].push_back(double_or_null(r.residual));
    cols["gap"].push_back(double_or_null(r.gap));
    cols["support"].push_back(r.support);
    cols["step"].push_back(double_or_null(r.step));
  }
  return {{"status", to_string(trace.status)},
          {"iterations", trace.iterations()},
          {"message", trace.message},
          {"records", cols}};
}

json aggregates_to_json(const ExperimentAggregates& agg) {
  return {{"median_snr", double_or_null(agg.median_snr)},
          {"mean_snr", double_or_null(agg.mean_snr)},
          {"snr_q1", double_or_null(agg.snr_q1)},
          {"snr_q3", double_or_null(agg.snr_q3)},
          {"median_iterations", double_or_null(agg.median_iterations)},
          {"success_count", agg.success_count},
          {"diverged_count", agg.diverged_count}};
}

std::string label_for(const json& value) {
  return value.is_string() ? value.get<std::string>() : value.dump();
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

json default_spec_json() {
  return spec_to_json(ExperimentSpec{});
}

json merge_spec_json(const json& doc) {
  if (!doc.is_object()) throw SpecError("spec document must be a JSON object");
  json merged = default_spec_json();
  json core = doc;
  for (const char* s : kOptionalSections) core.erase(s);
  merge_into(merged, core, "");
  for (const char* s : kOptionalSections) {
    if (doc.contains(s)) merged[s] = doc.at(s);
  }
  return merged;
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw SpecError("override '" + item + "' is not of the form key=value");
    }
    set_existing(doc, item.substr(0, eq), parse_override_value(item.substr(eq + 1)));
  }
}

ExperimentSpec spec_from_json(const json& raw) {
  const json doc = merge_spec_json(raw);
  ExperimentSpec spec;
  spec.n = get_as<int>(doc, nullptr, "n");
  spec.m_ratio = get_as<double>(doc, nullptr, "m_ratio");
  spec.sparsity_ratio = get_as<double>(doc, nullptr, "sparsity_ratio");
  spec.c = get_as<int>(doc, nullptr, "c");
  spec.d = get_as<int>(doc, nullptr, "d");
  try {
    spec.form = parse_nonlinear_form(get_as<std::string>(doc, nullptr, "form"));
  } catch (const DomainError& e) {
    throw SpecError(e.what());
  }
  spec.matrix_scale = get_as<double>(doc, nullptr, "matrix_scale");
  spec.amplitude = get_as<double>(doc, nullptr, "amplitude");

  const json& noise = doc.at("noise_db");
  if (noise.is_string() && noise.get<std::string>() == "none") {
    spec.noise_db.reset();
  } else if (noise.is_number()) {
    spec.noise_db = noise.get<double>();
  } else {
    throw SpecError("noise_db must be a number or \"none\", got " + noise.dump());
  }

  spec.seed = get_as<std::uint64_t>(doc, nullptr, "seed");
  spec.trials = get_as<int>(doc, nullptr, "trials");

  spec.eta = get_as<double>(doc, "solver", "eta");
  spec.lambda = get_as<double>(doc, "solver", "lambda");
  spec.step = step_from_json(doc.at("solver").at("step"));
  const json& alpha = doc.at("solver").at("alpha");
  if (alpha.is_string() && alpha.get<std::string>() == "discrepancy") {
    spec.alpha.reset();
  } else if (alpha.is_number()) {
    spec.alpha = alpha.get<double>();
  } else {
    throw SpecError("solver.alpha must be a number or \"discrepancy\", got " + alpha.dump());
  }
  spec.max_iters = get_as<int>(doc, "solver", "max_iters");
  const json& tol = doc.at("solver").at("grad_tol");
  if (tol.is_null()) {
    spec.grad_tol.reset();
  } else {
    spec.grad_tol = get_as<double>(doc, "solver", "grad_tol");
  }
  spec.divergence_guard = get_as<double>(doc, "solver", "divergence_guard");
  spec.x0_scale = get_as<double>(doc, "solver", "x0_scale");

  spec.discrepancy.alpha0 = get_as<double>(doc, "discrepancy", "alpha0");
  spec.discrepancy.tau = get_as<double>(doc, "discrepancy", "tau");
  spec.discrepancy.max_halvings = get_as<int>(doc, "discrepancy", "max_halvings");

  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw SpecError(std::string("invalid spec: ") + e.what());
  }
  return spec;
}

json spec_to_json(const ExperimentSpec& spec) {
  json doc;
  doc["n"] = spec.n;
  doc["m_ratio"] = spec.m_ratio;
  doc["sparsity_ratio"] = spec.sparsity_ratio;
  doc["c"] = spec.c;
  doc["d"] = spec.d;
  doc["form"] = to_string(spec.form);
  doc["matrix_scale"] = spec.matrix_scale;
  doc["amplitude"] = spec.amplitude;
  doc["noise_db"] = spec.noise_db ? json(*spec.noise_db) : json("none");
  doc["seed"] = spec.seed;
  doc["trials"] = spec.trials;
  doc["solver"] = {
      {"eta", spec.eta},
      {"lambda", spec.lambda},
      {"step", step_to_json(spec.step)},
      {"alpha", spec.alpha ? json(*spec.alpha) : json("discrepancy")},
      {"max_iters", spec.max_iters},
      {"grad_tol", spec.grad_tol ? json(*spec.grad_tol) : json(nullptr)},
      {"divergence_guard", spec.divergence_guard},
      {"x0_scale", spec.x0_scale},
  };
  doc["discrepancy"] = {
      {"alpha0", spec.discrepancy.alpha0},
      {"tau", spec.discrepancy.tau},
      {"max_halvings", spec.discrepancy.max_halvings},
  };
  return doc;
}

json load_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError("cannot parse '" + path.string() + "': " + e.what());
  }
  return merge_spec_json(doc);
}

json trial_to_json(const TrialRecord& t) {
  json alpha_trials = json::array();
  for (const auto& a : t.alpha_trials) {
    alpha_trials.push_back({{"alpha", a.alpha},
                            {"residual", double_or_null(a.residual)},
                            {"status", to_string(a.status)},
                            {"iterations", a.iterations}});
  }
  return {{"trial", t.trial},
          {"seed", t.seed},
          {"alpha", double_or_null(t.alpha)},
          {"alpha_outcome", t.alpha_outcome ? json(to_string(*t.alpha_outcome)) : json(nullptr)},
          {"alpha_trials", alpha_trials},
          {"snr", double_or_null(t.snr)},
          {"relative_error", double_or_null(t.relative_error)},
          {"iterations", t.iterations},
          {"status", to_string(t.status)},
          {"support", t.support},
          {"residual", double_or_null(t.residual)},
          {"delta", t.delta},
          {"recall_positive", double_or_null(t.recall.positive)},
          {"recall_negative", double_or_null(t.recall.negative)},
          {"x_star", signal_to_json(t.x_star)},
          {"x_true", signal_to_json(t.x_true)}};
}

json report_to_json(const ExperimentReport& report) {
  json trials = json::array();
  for (const auto& t : report.trials) trials.push_back(trial_to_json(t));
  json doc = {{"spec", spec_to_json(report.spec)},
              {"trials", trials},
              {"aggregates", aggregates_to_json(report.aggregates)}};
  if (report.trace) doc["trace"] = trace_to_json(*report.trace);
  return doc;
}

json sweep_to_json(const SweepReport& report) {
  json cells = json::array();
  const std::size_t rows = std::max<std::size_t>(1, report.grid.row_labels.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < report.grid.col_labels.size(); ++c) {
      const ExperimentReport& cell = report.at(r, c);
      json entry = {{"col", report.grid.col_labels[c]},
                    {"diverged", report.cell_diverged(r, c)},
                    {"report", report_to_json(cell)}};
      if (!report.grid.row_labels.empty()) entry["row"] = report.grid.row_labels[r];
      cells.push_back(std::move(entry));
    }
  }
  return {{"row_key", report.grid.row_key},
          {"row_labels", report.grid.row_labels},
          {"col_key", report.grid.col_key},
          {"col_labels", report.grid.col_labels},
          {"cells", cells}};
}

json rate_study_to_json(const RateStudyReport& report) {
  json points = json::array();
  for (const auto& p : report.points) {
    points.push_back({{"noise_db", p.noise_db},
                      {"median_delta", double_or_null(p.median_delta)},
                      {"median_error", double_or_null(p.median_error)},
                      {"used", p.used},
                      {"diverged", p.diverged}});
  }
  return {{"alpha_rule", to_string(report.rule)},
          {"apriori_constant", report.apriori_constant},
          {"points", points},
          {"excluded_noise_db", report.excluded_noise_db},
          {"fit",
           {{"slope", report.fit.slope},
            {"intercept", report.fit.intercept},
            {"std_error", report.fit.std_error},
            {"ci_low", double_or_null(report.fit.ci_low)},
            {"ci_high", double_or_null(report.fit.ci_high)},
            {"points", report.fit.points}}}};
}

std::string trace_to_csv(const SolverTrace& trace) {
  std::ostringstream out;
  out << "k,objective,residual,gap,support,step\n";
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.objective) << ',' << format_double(r.residual) << ','
        << format_double(r.gap) << ',' << r.support << ',' << format_double(r.step) << '\n';
  }
  return out.str();
}

std::string trials_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "trial,seed,alpha,snr,relative_error,iterations,status,support,residual,delta,"
         "recall_positive,recall_negative\n";
  for (const auto& t : report.trials) {
    out << t.trial << ',' << t.seed << ',' << format_double(t.alpha) << ','
        << format_double(t.snr) << ',' << format_double(t.relative_error) << ','
        << t.iterations << ',' << to_string(t.status) << ',' << t.support << ','
        << format_double(t.residual) << ',' << format_double(t.delta) << ','
        << format_double(t.recall.positive) << ',' << format_double(t.recall.negative) << '\n';
  }
  return out.str();
}

SweepGrid sweep_grid_from_json(const json& raw) {
  if (!raw.contains("sweep")) throw SpecError("spec has no \"sweep\" section");
  const json& sweep = raw.at("sweep");
  json base = raw;
  for (const char* s : kOptionalSections) base.erase(s);

  auto read_axis = [&](const char* name, std::string& key, std::vector<json>& values) {
    const json& axis = sweep.at(name);
    if (!axis.contains("key") || !axis.contains("values") || !axis.at("values").is_array() ||
        axis.at("values").empty()) {
      throw SpecError(std::string("sweep.") + name + " needs \"key\" and a non-empty \"values\"");
    }
    key = axis.at("key").get<std::string>();
    if (!base.contains(pointer_for(key))) throw SpecError("unknown sweep key '" + key + "'");
    values = axis.at("values").get<std::vector<json>>();
  };

  SweepGrid grid;
  std::vector<json> row_values, col_values;
  if (!sweep.contains("cols")) throw SpecError("sweep needs a \"cols\" axis");
  read_axis("cols", grid.col_key, col_values);
  if (sweep.contains("rows")) read_axis("rows", grid.row_key, row_values);

  for (const auto& v : col_values) grid.col_labels.push_back(label_for(v));
  for (const auto& v : row_values) grid.row_labels.push_back(label_for(v));

  const std::size_t rows = std::max<std::size_t>(1, row_values.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (const auto& cv : col_values) {
      json cell = base;
      if (!row_values.empty()) set_existing(cell, grid.row_key, row_values[r]);
      set_existing(cell, grid.col_key, cv);
      grid.cells.push_back(spec_from_json(cell));
    }
  }
  return grid;
}

std::string sweep_table_csv(const SweepReport& report, SweepMetric metric) {
  const SweepGrid& g = report.grid;
  auto cell_value = [&](std::size_t r, std::size_t c, SweepMetric m) {
    if (report.cell_diverged(r, c)) return std::string("NaN");
    const auto& agg = report.at(r, c).aggregates;
    return format_double(m == SweepMetric::snr ? agg.median_snr : agg.median_iterations);
  };

  std::ostringstream out;
  if (g.row_labels.empty()) {
    out << g.col_key;
    for (const auto& l : g.col_labels) out << ',' << l;
    out << '\n';
    for (SweepMetric m : {SweepMetric::snr, SweepMetric::iterations}) {
      out << (m == SweepMetric::snr ? "SNR" : "iterations");
      for (std::size_t c = 0; c < g.col_labels.size(); ++c) out << ',' << cell_value(0, c, m);
      out << '\n';
    }
    return out.str();
  }
  out << g.row_key << '\\' << g.col_key;
  for (const auto& l : g.col_labels) out << ',' << l;
  out << '\n';
  for (std::size_t r = 0; r < g.row_labels.size(); ++r) {
    out << g.row_labels[r];
    for (std::size_t c = 0; c < g.col_labels.size(); ++c) out << ',' << cell_value(r, c, metric);
    out << '\n';
  }
  return out.str();
}

std::string rate_study_to_csv(const RateStudyReport& report) {
  std::ostringstream out;
  out << "noise_db,median_delta,median_error,used,diverged\n";
  for (const auto& p : report.points) {
    out << format_double(p.noise_db) << ',' << format_double(p.median_delta) << ','
        << format_double(p.median_error) << ',' << p.used << ',' << p.diverged << '\n';
  }
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

}  // namespace nlsparse
