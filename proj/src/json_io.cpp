#include "hasod/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hasod/errors.hpp"

namespace hasod {

namespace {

void dump_string(const std::string& s, std::string& out) {
  // Reuse nlohmann's escaping for strings.
  out += Json(s).dump();
}

void dump(const Json& v, std::string& out) {
  switch (v.type()) {
    case Json::value_t::null: out += "null"; break;
    case Json::value_t::boolean: out += v.get<bool>() ? "true" : "false"; break;
    case Json::value_t::number_integer: out += std::to_string(v.get<std::int64_t>()); break;
    case Json::value_t::number_unsigned: out += std::to_string(v.get<std::uint64_t>()); break;
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw Error(ErrorCode::NonFinite, "cannot serialize a non-finite number");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", d == 0.0 ? 0.0 : d);  // no "-0"
      out += buf;
      break;
    }
    case Json::value_t::string: dump_string(v.get_ref<const std::string&>(), out); break;
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += ',';
        first = false;
        dump(e, out);
      }
      out += ']';
      break;
    }
    case Json::value_t::object: {
      // nlohmann's default object_t is a std::map, so iteration is key-sorted.
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        dump_string(it.key(), out);
        out += ':';
        dump(it.value(), out);
      }
      out += '}';
      break;
    }
    default: throw Error(ErrorCode::MalformedInput, "unsupported JSON value");
  }
}

template <typename F>
auto guarded(const char* what, F&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string canonical_dump(const Json& value) {
  std::string out;
  dump(value, out);
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Json vector_to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Vector vector_from_json(const Json& j) {
  return guarded("vector", [&] {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
  });
}

Json matrix_to_json(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) j.push_back(vector_to_json(m.row(i).transpose()));
  return j;
}

Matrix matrix_from_json(const Json& j, std::size_t cols) {
  return guarded("matrix", [&] {
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
      const Json& row = j.at(i);
      if (row.size() != cols) throw Error(ErrorCode::MalformedInput, "matrix row has wrong length");
      for (std::size_t c = 0; c < cols; ++c) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row.at(c).get<double>();
      }
    }
    return m;
  });
}

Json to_json(const Design& design) {
  Json tags = Json::array();
  for (RowTag t : design.row_tags) tags.push_back(std::string(to_string(t)));
  return Json{{"phase_tag", std::string(to_string(design.phase))},
              {"rows", matrix_to_json(design.rows)},
              {"row_tags", tags}};
}

Design design_from_json(const Json& j, std::size_t k) {
  return guarded("design", [&] {
    Design d;
    d.k = k;
    d.phase = phase_from_string(j.at("phase_tag").get<std::string>());
    d.rows = matrix_from_json(j.at("rows"), k);
    for (const auto& t : j.at("row_tags")) d.row_tags.push_back(row_tag_from_string(t.get<std::string>()));
    if (d.row_tags.size() != static_cast<std::size_t>(d.rows.rows())) {
      throw Error(ErrorCode::MalformedInput, "row_tags length differs from rows");
    }
    return d;
  });
}

Json to_json(const ScreeningReport& r) {
  Json is = Json::array();
  for (const auto& [pair, score] : r.interaction_scores) {
    is.push_back(Json{{"i", pair.first}, {"j", pair.second}, {"score", score}});
  }
  return Json{{"k", r.k},
              {"cwess", vector_to_json(r.cwess)},
              {"beta_main", vector_to_json(r.beta_main)},
              {"se_main", vector_to_json(r.se_main)},
              {"snr", r.snr},
              {"interaction_scores", is},
              {"w_int", r.w_int},
              {"epsilon", r.epsilon}};
}

ScreeningReport screening_report_from_json(const Json& j) {
  return guarded("screening", [&] {
    ScreeningReport r;
    r.k = j.at("k").get<std::size_t>();
    r.cwess = vector_from_json(j.at("cwess"));
    r.beta_main = vector_from_json(j.at("beta_main"));
    r.se_main = vector_from_json(j.at("se_main"));
    r.snr = j.at("snr").get<double>();
    for (const auto& e : j.at("interaction_scores")) {
      r.interaction_scores[{e.at("i").get<std::size_t>(), e.at("j").get<std::size_t>()}] = e.at("score").get<double>();
    }
    r.w_int = j.at("w_int").get<double>();
    r.epsilon = j.at("epsilon").get<double>();
    return r;
  });
}

Json to_json(const FactorClassification& c) {
  Json labels = Json::array();
  for (FactorLabel l : c.labels) labels.push_back(std::string(to_string(l)));
  Json pairs = Json::array();
  for (const auto& [i, j] : c.significant_interactions) pairs.push_back(Json::array({i, j}));
  return Json{{"labels", labels},         {"critical_set", c.critical_set},
              {"k_c", c.k_c},             {"significant_interactions", pairs},
              {"n_int", c.n_int},         {"tau_p", c.tau_p},
              {"tau_a", c.tau_a},         {"tau_crit", c.tau_crit}};
}

FactorClassification classification_from_json(const Json& j) {
  return guarded("classification", [&] {
    FactorClassification c;
    for (const auto& l : j.at("labels")) c.labels.push_back(factor_label_from_string(l.get<std::string>()));
    c.critical_set = j.at("critical_set").get<std::vector<std::size_t>>();
    c.k_c = j.at("k_c").get<std::size_t>();
    for (const auto& p : j.at("significant_interactions")) {
      c.significant_interactions.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    }
    c.n_int = j.at("n_int").get<std::size_t>();
    c.tau_p = j.at("tau_p").get<double>();
    c.tau_a = j.at("tau_a").get<double>();
    c.tau_crit = j.at("tau_crit").get<double>();
    return c;
  });
}

Json to_json(const Strategy& s) {
  return Json{{"kind", std::string(to_string(s.kind))}, {"rationale", s.rationale}};
}

Strategy strategy_from_json(const Json& j) {
  return guarded("strategy", [&] {
    return Strategy{strategy_kind_from_string(j.at("kind").get<std::string>()),
                    j.at("rationale").get<std::string>()};
  });
}

Json to_json(const CombinedModel& m) {
  Json centers = Json::array();
  for (const auto& t : m.terms) centers.push_back(t.center);
  return Json{{"beta", vector_to_json(m.beta.values)},
              {"intercept", m.beta.intercept},
              {"column_spec", m.column_spec},
              {"term_centers", centers},
              {"lambda", m.lambda},
              {"diagnostics", Json{{"mse", m.diagnostics.mse},
                                   {"se", vector_to_json(m.diagnostics.se)},
                                   {"snr", m.diagnostics.snr}}}};
}

CombinedModel combined_model_from_json(const Json& j) {
  return guarded("combined", [&] {
    CombinedModel m;
    m.beta.values = vector_from_json(j.at("beta"));
    m.beta.intercept = j.at("intercept").get<double>();
    m.column_spec = j.at("column_spec").get<std::vector<std::string>>();
    const Json& centers = j.at("term_centers");
    if (centers.size() != m.column_spec.size()) {
      throw Error(ErrorCode::MalformedInput, "term_centers length differs from column_spec");
    }
    for (std::size_t i = 0; i < m.column_spec.size(); ++i) {
      m.terms.push_back(term_from_name(m.column_spec[i], centers.at(i).get<double>()));
    }
    m.lambda = j.at("lambda").get<double>();
    const Json& d = j.at("diagnostics");
    m.diagnostics.mse = d.at("mse").get<double>();
    m.diagnostics.se = vector_from_json(d.at("se"));
    m.diagnostics.snr = d.at("snr").get<double>();
    return m;
  });
}

Json to_json(const KernelParams& p) {
  return Json{{"sigma_f2", p.sigma_f2}, {"ell", p.ell}, {"sigma_n2", p.sigma_n2}};
}

KernelParams kernel_params_from_json(const Json& j) {
  return guarded("gp", [&] {
    return KernelParams{j.at("sigma_f2").get<double>(), j.at("ell").get<double>(), j.at("sigma_n2").get<double>()};
  });
}

Json to_json(const OptimumEstimate& o) {
  return Json{{"x_star", vector_to_json(o.x_star)},
              {"mu_at_x_star", o.mu_at_x_star},
              {"var_at_x_star", o.var_at_x_star}};
}

OptimumEstimate optimum_from_json(const Json& j) {
  return guarded("optimum", [&] {
    return OptimumEstimate{vector_from_json(j.at("x_star")), j.at("mu_at_x_star").get<double>(),
                           j.at("var_at_x_star").get<double>()};
  });
}

Json to_json(const DEConfig& c) {
  return Json{{"population", c.population},   {"f_weight", c.f_weight},
              {"crossover", c.crossover},     {"max_generations", c.max_generations},
              {"tol", c.tol},                 {"stall_window", c.stall_window}};
}

DEConfig de_config_from_json(const Json& j) {
  return guarded("de", [&] {
    DEConfig c;
    c.population = j.value("population", c.population);
    c.f_weight = j.value("f_weight", c.f_weight);
    c.crossover = j.value("crossover", c.crossover);
    c.max_generations = j.value("max_generations", c.max_generations);
    c.tol = j.value("tol", c.tol);
    c.stall_window = j.value("stall_window", c.stall_window);
    return c;
  });
}

}  // namespace hasod
