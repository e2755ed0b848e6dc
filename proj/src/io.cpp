#include "kfp/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kfp/errors.hpp"

namespace kfp::io {

namespace {

using nlohmann::json;

json parse_object(const std::string& text, std::string_view what) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ParseError(std::string(what) + " must be a JSON object");
  return doc;
}

void reject_unknown_keys(const json& doc, const std::set<std::string>& known, std::string_view what) {
  for (const auto& item : doc.items()) {
    if (!known.contains(item.key())) {
      throw ParseError("unknown key '" + item.key() + "' in " + std::string(what));
    }
  }
}

double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) throw ParseError(where + " must be a number");
  return value.get<double>();
}

Complex as_complex(const json& value, const std::string& where) {
  if (value.is_number()) return {value.get<double>(), 0.0};
  if (value.is_array() && value.size() == 2 && value[0].is_number() && value[1].is_number()) {
    return {value[0].get<double>(), value[1].get<double>()};
  }
  throw ParseError(where + " must be a number or a [re, im] pair");
}

std::vector<Complex> as_complex_list(const json& value, const std::string& where) {
  if (!value.is_array()) throw ParseError(where + " must be a list");
  std::vector<Complex> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(as_complex(value[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::uint64_t as_count(const json& value, const std::string& where) {
  if (!value.is_number_unsigned()) {
    throw ParseError(where + " must be a non-negative integer");
  }
  return value.get<std::uint64_t>();
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

}  // namespace

FilterModel parse_model_spec(const std::string& text) {
  const json doc = parse_object(text, "model spec");
  reject_unknown_keys(doc, {"p", "q", "d", "poles", "roots", "gain"}, "model spec");
  const auto poles = doc.contains("poles") ? as_complex_list(doc["poles"], "poles") : std::vector<Complex>{};
  const auto roots = doc.contains("roots") ? as_complex_list(doc["roots"], "roots") : std::vector<Complex>{};
  if (doc.contains("p") && as_count(doc["p"], "p") != poles.size()) {
    throw ParseError("p = " + doc["p"].dump() + " but " + std::to_string(poles.size()) + " poles given");
  }
  if (doc.contains("q") && as_count(doc["q"], "q") != roots.size()) {
    throw ParseError("q = " + doc["q"].dump() + " but " + std::to_string(roots.size()) + " roots given");
  }
  const double gain = doc.contains("gain") ? as_number(doc["gain"], "gain") : 1.0;
  if (doc.contains("d")) return FilterModel::arfima(as_complex(doc["d"], "d"), poles, roots, gain);
  return FilterModel::arma(poles, roots, gain);
}

std::string write_model_spec(const FilterModel& model) {
  json doc = json::object();
  doc["p"] = model.p();
  doc["q"] = model.q();
  if (model.has_fi()) doc["d"] = complex_json(model.d());
  doc["poles"] = json::array();
  for (const Complex z : model.poles()) doc["poles"].push_back(complex_json(z));
  doc["roots"] = json::array();
  for (const Complex z : model.roots()) doc["roots"].push_back(complex_json(z));
  doc["gain"] = model.gain();
  return doc.dump(2) + "\n";
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  const json doc = parse_object(text, "experiment config");
  reject_unknown_keys(doc,
                      {"family", "true_params", "sample_sizes", "replications", "grid", "prior_ids",
                       "seed", "boundary_margin", "kl_tolerance", "kappa2_ratio"},
                      "experiment config");
  ExperimentConfig c;
  if (doc.contains("family")) {
    if (!doc["family"].is_string()) throw ParseError("family must be a string");
    const auto family = doc["family"].get<std::string>();
    if (family == "AR1") {
      c.family = ModelFamily::ar1;
    } else if (family == "AR2") {
      c.family = ModelFamily::ar2;
    } else {
      throw ParseError("family must be AR1 or AR2, got '" + family + "'");
    }
  }
  if (doc.contains("true_params")) {
    if (!doc["true_params"].is_array()) throw ParseError("true_params must be a list");
    c.true_params.clear();
    for (const auto& v : doc["true_params"]) c.true_params.push_back(as_number(v, "true_params"));
  }
  if (doc.contains("sample_sizes")) {
    if (!doc["sample_sizes"].is_array()) throw ParseError("sample_sizes must be a list");
    c.sample_sizes.clear();
    for (const auto& v : doc["sample_sizes"]) c.sample_sizes.push_back(as_count(v, "sample_sizes"));
  }
  if (doc.contains("replications")) c.replications = as_count(doc["replications"], "replications");
  if (doc.contains("grid")) c.grid = as_count(doc["grid"], "grid");
  if (doc.contains("prior_ids")) {
    if (!doc["prior_ids"].is_array()) throw ParseError("prior_ids must be a list");
    c.prior_ids.clear();
    for (const auto& v : doc["prior_ids"]) {
      if (!v.is_string()) throw ParseError("prior_ids entries must be strings");
      c.prior_ids.push_back(v.get<std::string>());
    }
  }
  if (doc.contains("seed")) c.seed = as_count(doc["seed"], "seed");
  if (doc.contains("boundary_margin")) c.boundary_margin = as_number(doc["boundary_margin"], "boundary_margin");
  if (doc.contains("kl_tolerance")) c.kl_tolerance = as_number(doc["kl_tolerance"], "kl_tolerance");
  if (doc.contains("kappa2_ratio")) c.kappa2_ratio = as_number(doc["kappa2_ratio"], "kappa2_ratio");
  return c;
}

std::string write_experiment_config(const ExperimentConfig& c) {
  json doc = json::object();
  doc["family"] = std::string(to_string(c.family));
  doc["true_params"] = c.true_params;
  doc["sample_sizes"] = c.sample_sizes;
  doc["replications"] = c.replications;
  doc["grid"] = c.grid;
  doc["prior_ids"] = c.prior_ids;
  doc["seed"] = c.seed;
  doc["boundary_margin"] = c.boundary_margin;
  doc["kl_tolerance"] = c.kl_tolerance;
  doc["kappa2_ratio"] = c.kappa2_ratio;
  return doc.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ParseError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ParseError("cannot move output into '" + path.string() + "': " + ec.message());
  }
}

std::string header_comment(const KeyValues& entries) {
  std::string out;
  for (const auto& [k, v] : entries) out += "# " + k + " = " + v + "\n";
  return out;
}

std::string key_value_document(const KeyValues& entries) {
  std::string out;
  for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_fixed17(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string tensor_csv(const CMatrix& m) {
  std::string out = "i,j,re,im\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out += std::to_string(i) + "," + std::to_string(j) + "," + format_fixed17(m(i, j).real()) + "," +
             format_fixed17(m(i, j).imag()) + "\n";
    }
  }
  return out;
}

std::string connection_csv(const ConnectionTensor& gamma) {
  std::string out = "i,j,k,re,im\n";
  const std::size_t n = gamma.dimension();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        const Complex v = gamma(i, j, k);
        out += std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + "," +
               format_fixed17(v.real()) + "," + format_fixed17(v.imag()) + "\n";
      }
    }
  }
  return out;
}

}  // namespace kfp::io
