#include "kfp/cli.hpp"

#include <charconv>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kfp/errors.hpp"
#include "kfp/geometry.hpp"
#include "kfp/priors.hpp"
#include "kfp/risk_lab.hpp"

namespace kfp::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

double parse_number(const std::string& text, const std::string& where) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) throw ParseError(where + ": '" + text + "' is not a number");
  return value;
}

std::string category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::parse:
      return "parse";
    case ErrorCategory::domain:
      return "domain";
    case ErrorCategory::precision:
      return "precision";
    case ErrorCategory::internal:
      return "internal";
  }
  return "internal";
}

std::string coordinate_columns(const FilterModel& model) {
  std::string out;
  for (std::size_t i = 0; i < model.dimension(); ++i) {
    const auto name = model.coordinate_name(i);
    out += name + ".re," + name + ".im,";
  }
  return out;
}

std::string point_csv(const FilterModel& model, const std::vector<PointLaplacian>& points,
                      const io::KeyValues& provenance) {
  std::string out = io::header_comment(provenance) + coordinate_columns(model) + "laplacian\n";
  for (const auto& pl : points) {
    for (Eigen::Index i = 0; i < pl.point.size(); ++i) {
      out += io::format_fixed17(pl.point[i].real()) + "," + io::format_fixed17(pl.point[i].imag()) + ",";
    }
    out += io::format_fixed17(pl.laplacian) + "\n";
  }
  return out;
}

std::string point_text(const ParamPoint& pt) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < pt.size(); ++i) {
    if (i) out += ", ";
    out += "(" + io::format_double(pt[i].real()) + ", " + io::format_double(pt[i].imag()) + ")";
  }
  return out + "]";
}

/// Shared state of one invocation.
struct Invocation {
  std::ostream& out;
  std::string verb;
  std::string input;
  std::string out_path;
  io::KeyValues provenance;

  void note(const std::string& key, const std::string& value) { provenance.emplace_back(key, value); }

  void emit(const std::string& body, bool comment_header) const {
    if (out_path.empty()) return;
    io::atomic_write(out_path, (comment_header ? io::header_comment(provenance) : "") + body);
  }
};

io::KeyValues base_provenance(const std::string& verb, const std::string& input) {
  return {{"tool", std::string("kfp ") + kVersion}, {"verb", verb}, {"input", input}};
}

FilterModel load_model(const std::string& path) { return io::parse_model_spec(io::read_file(path)); }

std::string domain_text(const SamplingDomain& d) {
  std::ostringstream s;
  s << "pole_radius=" << d.pole_radius << " d_max=" << d.d_max << " min_separation=" << d.min_separation
    << " min_one_minus_product=" << d.min_one_minus_product;
  return s.str();
}

}  // namespace

std::vector<GridAxis> parse_grid(const std::string& spec, const FilterModel& model) {
  std::vector<GridAxis> axes;
  if (spec.empty()) return axes;
  std::stringstream items(spec);
  std::string item;
  while (std::getline(items, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("grid axis '" + item + "' needs name=start:stop:count");
    GridAxis axis;
    std::string name = item.substr(0, eq);
    axis.label = name;
    if (name.size() > 3 && name.ends_with(".im")) {
      axis.imaginary = true;
      name.resize(name.size() - 3);
    } else if (name.size() > 3 && name.ends_with(".re")) {
      name.resize(name.size() - 3);
    }
    bool found = false;
    for (std::size_t i = 0; i < model.dimension(); ++i) {
      if (model.coordinate_name(i) == name) {
        axis.coordinate = i;
        found = true;
      }
    }
    if (!found) throw ParseError("grid axis names unknown coordinate '" + name + "'");
    std::vector<std::string> parts;
    std::stringstream range(item.substr(eq + 1));
    std::string part;
    while (std::getline(range, part, ':')) parts.push_back(part);
    if (parts.size() != 3) throw ParseError("grid axis '" + item + "' needs start:stop:count");
    axis.start = parse_number(parts[0], "grid start");
    axis.stop = parse_number(parts[1], "grid stop");
    const double count = parse_number(parts[2], "grid count");
    if (count < 0 || count != static_cast<double>(static_cast<std::size_t>(count))) {
      throw ParseError("grid count must be a non-negative integer");
    }
    axis.count = static_cast<std::size_t>(count);
    axes.push_back(axis);
  }
  if (axes.size() > 2) throw ParseError("scans support one or two axes");
  return axes;
}

std::string emit_scan(const FilterModel& model, const ScalarField& field,
                      const std::vector<GridAxis>& axes, const io::KeyValues& provenance) {
  std::string out = io::header_comment(provenance);
  for (const auto& axis : axes) out += axis.label + ",";
  out += "value,laplacian\n";
  const auto node_value = [](const GridAxis& axis, std::size_t k) {
    if (axis.count == 1) return axis.start;
    return axis.start + (axis.stop - axis.start) * static_cast<double>(k) / static_cast<double>(axis.count - 1);
  };
  std::size_t total = 1;
  for (const auto& axis : axes) total *= axis.count;
  if (axes.empty()) total = 0;

  std::vector<std::string> rows(total);
  std::vector<std::vector<double>> coords(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    std::vector<double> c(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      c[a] = node_value(axes[a], rest % axes[a].count);
      rest /= axes[a].count;
    }
    coords[flat] = std::move(c);
  }
  // Nodes are checked in order so the first invalid one is reported.
  std::vector<FilterModel> models;
  models.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    ParamPoint pt = model.point();
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto idx = static_cast<Eigen::Index>(axes[a].coordinate);
      Complex& z = pt.coords[idx];
      z = axes[a].imaginary ? Complex(z.real(), coords[flat][a]) : Complex(coords[flat][a], z.imag());
    }
    try {
      models.push_back(model.at(pt));
    } catch (const DomainError& e) {
      std::string where;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        where += (a ? ", " : "") + axes[a].label + "=" + io::format_double(coords[flat][a]);
      }
      throw DomainError("scan node " + std::to_string(flat) + " (" + where + ") leaves the valid domain: " +
                        e.what());
    }
  }
  parallel_for(total, [&](std::size_t flat) {
    const FilterModel& at = models[flat];
    const FieldJet jet = field.jet(at);
    const double lap = laplace_beltrami(metric_closed_form(at), jet);
    std::string row;
    for (const double c : coords[flat]) row += io::format_fixed17(c) + ",";
    row += io::format_fixed17(jet.value) + "," + io::format_fixed17(lap) + "\n";
    rows[flat] = std::move(row);
  });
  for (const auto& row : rows) out += row;
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kahler information geometry of linear filters and superharmonic priors", "kfp"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string input;
  std::string prior_id;
  std::string out_path;
  std::uint64_t seed = 1;
  std::size_t samples = 0;
  std::optional<std::size_t> rmax;
  std::optional<double> tol;
  std::string grid;
  std::string tensor = "metric";
  std::string points_path;
  bool sqrt_prior = false;
  std::uint64_t sample_size = 50;

  const auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", out_path, "Output file (written atomically)");
  };

  auto* geometry = app.add_subcommand("geometry", "Metric and derived tensors at the spec's point as CSV");
  geometry->add_option("spec", input, "Model spec (JSON)")->required();
  geometry->add_option("--tensor", tensor, "metric | inverse | series | connection | ricci | mixing")
      ->check(CLI::IsMember({"metric", "inverse", "series", "connection", "ricci", "mixing"}));
  geometry->add_option("--rmax", rmax, "Series truncation for --tensor series");
  add_out(geometry);

  auto* potential = app.add_subcommand("potential", "Kahler potential at the spec's point");
  potential->add_option("spec", input, "Model spec (JSON)")->required();
  potential->add_option("--rmax", rmax, "Series truncation (default: adaptive)");
  potential->add_option("--tol", tol, "Truncation tolerance (default 1e-10)");
  add_out(potential);

  auto* kahler = app.add_subcommand("check-kahler", "Sampled Hermitian and closedness certificate");
  kahler->add_option("spec", input, "Model spec (JSON)")->required();
  kahler->add_option("--samples", samples, "Sampled points (default 100)");
  kahler->add_option("--seed", seed, "Sampling seed");
  kahler->add_option("--tol", tol, "Closedness tolerance (default 1e-6)");
  add_out(kahler);

  auto* certify = app.add_subcommand("certify-prior", "Sampled superharmonicity certificate of a prior");
  certify->add_option("prior", prior_id, "Catalog identifier, e.g. psi1-a0.5/kappa1")->required();
  certify->add_option("spec", input, "Model spec (JSON) fixing the structure")->required();
  certify->add_option("--samples", samples, "Sampled points (default 500)");
  certify->add_option("--seed", seed, "Sampling seed");
  certify->add_option("--tol", tol, "Verdict tolerance (default 1e-8)");
  certify->add_flag("--sqrt", sqrt_prior, "Certify the square root of the prior function");
  certify->add_option("--points", points_path, "Per-point CSV of sampled Laplacians");
  add_out(certify);

  auto* formula = app.add_subcommand("risk-formula", "Leading-order KL risk improvement at the spec's point");
  formula->add_option("prior", prior_id, "Catalog identifier")->required();
  formula->add_option("spec", input, "Model spec (JSON)")->required();
  formula->add_option("-N,--sample-size", sample_size, "Sample size N")->check(CLI::PositiveNumber);
  add_out(formula);

  auto* sim = app.add_subcommand("risk-sim", "Monte Carlo KL prediction risk experiment");
  sim->add_option("config", input, "Experiment config (JSON)")->required();
  sim->add_option("--seed", seed, "Override the config seed");
  sim->add_option("--samples", samples, "Override the number of replications");
  sim->add_option("--grid", grid, "Override quadrature nodes per dimension");
  sim->add_option("--tol", tol, "Override the KL integration tolerance");
  add_out(sim);

  auto* scan = app.add_subcommand("scan", "Field value and Laplacian over a 1-D or 2-D parameter slice");
  scan->add_option("field", prior_id, "Catalog identifier")->required();
  scan->add_option("spec", input, "Model spec (JSON) giving the base point")->required();
  scan->add_option("--grid", grid, "name=start:stop:count[,name=start:stop:count]")->required();
  add_out(scan);

  auto* normalize = app.add_subcommand("spec-normalize", "Reparse a model spec and write it canonically");
  normalize->add_option("spec", input, "Model spec (JSON)")->required();
  add_out(normalize);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::parse);
  }

  auto* sub = app.get_subcommands().front();
  Invocation inv{out, sub->get_name(), input, out_path, base_provenance(sub->get_name(), input)};
  try {
    if (sub == geometry) {
      const FilterModel model = load_model(input);
      std::string body;
      const HermitianMetric metric = metric_closed_form(model);
      inv.note("tensor", tensor);
      if (tensor == "metric") {
        body = io::tensor_csv(metric.g);
      } else if (tensor == "inverse") {
        // g^{i jbar} stored as g_inv(j, i); emit rows by the upper i index.
        body = io::tensor_csv(metric.g_inv.transpose());
      } else if (tensor == "series") {
        const std::size_t r = rmax.value_or(default_truncation(model));
        inv.note("rmax", std::to_string(r));
        body = io::tensor_csv(metric_series(model, model.point(), r).g);
      } else if (tensor == "connection") {
        body = io::connection_csv(connection(model, model.point()));
      } else if (tensor == "ricci") {
        const RicciOptions opts;
        inv.note("fd_rel_step", io::format_double(opts.rel_step));
        const RicciResult ric = ricci(model, model.point(), opts);
        if (ric.precision_warning) inv.note("warning", "metric condition number above 1e8");
        body = io::tensor_csv(ric.r);
      } else {
        body = io::tensor_csv(ricci_mixing_correction(model, model.point()));
      }
      inv.emit(body, true);
      out << "geometry: n=" << model.dimension() << " det=" << io::format_double(metric.det)
          << " condition=" << io::format_double(metric.condition_estimate) << " tensor=" << tensor << "\n";
    } else if (sub == potential) {
      const FilterModel model = load_model(input);
      TruncationPolicy policy;
      if (tol) policy.tolerance = *tol;
      const std::size_t r = rmax.value_or(default_truncation(model, policy));
      const double series = kahler_potential_series(model, r);
      const double closed = kahler_potential_closed_form(model);
      const double bound = kahler_potential_bound(model);
      inv.note("truncation_tolerance", io::format_double(policy.tolerance));
      inv.emit(io::key_value_document({{"potential", io::format_fixed17(series)},
                                       {"closed_form", io::format_fixed17(closed)},
                                       {"truncation", std::to_string(r)},
                                       {"tail_bound", io::format_fixed17(cepstrum_tail_bound(model, r))},
                                       {"bound", io::format_fixed17(bound)}}),
               true);
      out << "potential = " << io::format_double(series) << " (closed form " << io::format_double(closed)
          << ", R=" << r << ", bound " << io::format_double(bound) << ")\n";
    } else if (sub == kahler) {
      const FilterModel model = load_model(input);
      KahlerOptions opts;
      if (tol) opts.closedness_tolerance = *tol;
      const std::size_t count = samples ? samples : 100;
      inv.note("seed", std::to_string(seed));
      inv.note("samples", std::to_string(count));
      inv.note("hermitian_tolerance", io::format_double(opts.hermitian_tolerance));
      inv.note("closedness_tolerance", io::format_double(opts.closedness_tolerance));
      inv.note("fd_rel_step", io::format_double(opts.fd_rel_step));
      inv.note("domain", domain_text(opts.domain));
      const KahlerCertificate cert = check_kahler(model, count, seed, opts);
      const std::string verdict = cert.pass ? "pass" : "fail";
      inv.emit(io::key_value_document({{"verdict", verdict},
                                       {"hermitian_residual", io::format_fixed17(cert.hermitian_residual)},
                                       {"closedness_residual", io::format_fixed17(cert.closedness_residual)},
                                       {"sampled_points", std::to_string(cert.sampled_points)}}),
               true);
      out << "check-kahler: " << verdict << " hermitian_residual=" << io::format_double(cert.hermitian_residual)
          << " closedness_residual=" << io::format_double(cert.closedness_residual)
          << " points=" << cert.sampled_points << "\n";
    } else if (sub == certify) {
      const FilterModel model = load_model(input);
      CertifyOptions opts;
      if (tol) opts.tolerance = *tol;
      opts.record_points = !points_path.empty();
      const std::size_t count = samples ? samples : 500;
      const CatalogEntry entry = make_prior(prior_id, model);
      if (entry.evaluation_only) {
        throw ConfigurationError("'" + prior_id + "' is evaluation-only and carries no superharmonicity claim");
      }
      inv.note("prior", prior_id);
      inv.note("seed", std::to_string(seed));
      inv.note("samples", std::to_string(count));
      inv.note("tolerance", io::format_double(opts.tolerance));
      inv.note("violation_factor", io::format_double(opts.violation_factor));
      inv.note("domain", domain_text(opts.domain));
      inv.note("note", "sampled certificate, not a proof");
      const SuperharmonicityReport report = sqrt_prior
                                                ? sqrt_psi_certificate(entry.field, model, count, seed, opts)
                                                : certify_superharmonic(entry.field, model, count, seed, opts);
      inv.emit(io::key_value_document({{"field", report.field_id},
                                       {"verdict", std::string(to_string(report.verdict))},
                                       {"max_laplacian", io::format_fixed17(report.max_laplacian)},
                                       {"min_laplacian", io::format_fixed17(report.min_laplacian)},
                                       {"worst_point", point_text(report.worst_point)},
                                       {"points_checked", std::to_string(report.points_checked)},
                                       {"tolerance", io::format_double(report.tolerance)}}),
               true);
      if (!points_path.empty()) io::atomic_write(points_path, point_csv(model, report.points, inv.provenance));
      out << "certify-prior " << report.field_id << ": " << to_string(report.verdict)
          << " max_laplacian=" << io::format_double(report.max_laplacian)
          << " min_laplacian=" << io::format_double(report.min_laplacian) << " points=" << report.points_checked
          << "\n";
    } else if (sub == formula) {
      const FilterModel model = load_model(input);
      const CatalogEntry entry = make_prior(prior_id, model);
      const double value = risk_improvement(entry.field, model, model.point(), sample_size);
      inv.note("prior", prior_id);
      inv.emit(io::key_value_document({{"prior", prior_id},
                                       {"sample_size", std::to_string(sample_size)},
                                       {"risk_improvement", io::format_fixed17(value)}}),
               true);
      out << "risk-formula " << prior_id << ": improvement=" << io::format_double(value) << " N=" << sample_size
          << "\n";
    } else if (sub == sim) {
      ExperimentConfig config = io::parse_experiment_config(io::read_file(input));
      if (sim->count("--seed")) config.seed = seed;
      if (samples) config.replications = samples;
      if (!grid.empty()) {
        const double nodes = parse_number(grid, "--grid");
        if (nodes < 2 || nodes != static_cast<double>(static_cast<std::size_t>(nodes))) {
          throw ParseError("--grid for risk-sim must be an integer >= 2");
        }
        config.grid = static_cast<std::size_t>(nodes);
      }
      if (tol) config.kl_tolerance = *tol;
      const RiskRun run = kl_risk(config);
      inv.note("family", std::string(to_string(config.family)));
      inv.note("seed", std::to_string(config.seed));
      inv.note("replications", std::to_string(config.replications));
      inv.note("grid", std::to_string(config.grid));
      inv.note("boundary_margin", io::format_double(config.boundary_margin));
      inv.note("kl_tolerance", io::format_double(config.kl_tolerance));
      inv.note("note", "prior mass is truncated at the grid boundary margin; results depend on it");
      std::string body = "prior_id,N,mean_kl_risk,std_error,replications\n";
      for (const auto& e : run.estimates) {
        body += e.prior_id + "," + std::to_string(e.sample_size) + "," + io::format_fixed17(e.mean_kl_risk) + "," +
                io::format_fixed17(e.std_error) + "," + std::to_string(e.replications_used) + "\n";
      }
      inv.emit(body, true);
      out << "risk-sim: " << config.prior_ids.size() << " priors x " << config.sample_sizes.size()
          << " sample sizes, " << config.replications << " replications\n";
    } else if (sub == scan) {
      const FilterModel model = load_model(input);
      const auto axes = parse_grid(grid, model);
      const CatalogEntry entry = make_prior(prior_id, model);
      inv.note("field", prior_id);
      inv.note("grid", grid);
      std::size_t rows = axes.empty() ? 0 : 1;
      for (const auto& a : axes) rows *= a.count;
      const std::string csv = emit_scan(model, entry.field, axes, inv.provenance);
      inv.emit(csv, false);
      out << "scan " << prior_id << ": " << rows << " rows\n";
    } else if (sub == normalize) {
      const std::string text = io::write_model_spec(load_model(input));
      if (out_path.empty()) {
        out << text;
      } else {
        inv.emit(text, false);
        out << "spec-normalize: wrote " << out_path << "\n";
      }
    }
    return 0;
  } catch (const Error& e) {
    err << "error[" << category_name(e.category()) << "]: " << e.what() << "\n";
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    err << "error[parse]: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::parse);
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::internal);
  }
}

}  // namespace kfp::cli
