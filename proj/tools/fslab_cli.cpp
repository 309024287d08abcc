#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fslab/json_io.hpp"

using namespace fslab;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  double tol = 1e-9;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string format = "json";
};

json report_header(const RunConfig& cfg, const std::string& command) {
  json out;
  out["command"] = command;
  out["seed"] = cfg.seed;
  out["tol"] = cfg.tol;
  return out;
}

void flatten(const json& node, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  if (node.is_object())
    for (const auto& [k, v] : node.items())
      flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  else
    out.push_back({prefix, node});
}

// json reports print as-is; csv is reserved for flat norm tables; human is a
// key: value listing
int emit(const json& report, const RunConfig& cfg, bool norm_table) {
  if (cfg.format == "json") {
    std::cout << report.dump(2) << "\n";
    return 0;
  }
  if (cfg.format == "csv") {
    if (!norm_table) {
      std::cerr << "csv output is only available for norm tables\n";
      return 4;
    }
    std::vector<std::pair<std::string, json>> rows;
    flatten(report, "", rows);
    std::cout << "name,value\n";
    for (const auto& [k, v] : rows)
      if (v.is_number()) std::cout << k << "," << v.dump() << "\n";
    return 0;
  }
  if (cfg.format == "human") {
    std::vector<std::pair<std::string, json>> rows;
    flatten(report, "", rows);
    for (const auto& [k, v] : rows) std::cout << k << ": " << v.dump() << "\n";
    return 0;
  }
  std::cerr << "unknown format \"" << cfg.format << "\"\n";
  return 4;
}

std::string absolute_path(const std::string& p) {
  std::error_code ec;
  const fs::path canon = fs::weakly_canonical(fs::path(p), ec);
  return ec ? fs::absolute(p).string() : canon.string();
}

// instance node for commands taking [object] or [action, object]: with an
// explicit action the object's source and target are that action
json object_node(JsonLoader& loader, const std::vector<std::string>& paths) {
  if (paths.size() == 1) return json(paths[0]);
  json content = loader.read_file(paths[1]);
  if (!content.is_object()) throw SchemaError(paths[1] + ": expected an object");
  const std::string act = absolute_path(paths[0]);
  content["source"] = act;
  content["target"] = act;
  return content;
}

json issues_json(const Report& rep) {
  json arr = json::array();
  for (const auto& s : rep.issues) arr.push_back(s);
  return arr;
}

int finish_validate(json& report, const Report& rep, const RunConfig& cfg) {
  report["issues"] = issues_json(rep);
  const int code = emit(report, cfg, false);
  if (code != 0) return code;
  return rep.ok() ? 0 : 2;
}

int cmd_validate(const RunConfig& cfg, const std::string& path) {
  JsonLoader loader(fs::current_path());
  const json content = loader.read_file(path);
  if (!content.is_object()) throw SchemaError(path + ": expected an object");
  json report = report_header(cfg, "validate");
  if (content.contains("comp")) {
    report["kind"] = "groupoid";
    const FiniteGroupoid g = groupoid_from_json(content);
    return finish_validate(report, validate(g), cfg);
  }
  if (content.contains("T")) {
    report["kind"] = "multiplier";
    const Multiplier m = loader.multiplier(json(path));
    Report rep = validate_multiplier(m);
    for (const auto& s : validate_action(*m.src, cfg.tol).issues) rep.add("source " + s);
    for (const auto& s : validate_action(*m.dst, cfg.tol).issues) rep.add("target " + s);
    return finish_validate(report, rep, cfg);
  }
  if (content.contains("W")) {
    report["kind"] = "correspondence";
    const auto e = loader.correspondence(json(path));
    Report rep = validate_correspondence(*e, cfg.tol);
    for (const auto& s : validate_action(*e->src, cfg.tol).issues) rep.add("source " + s);
    for (const auto& s : validate_action(*e->tgt, cfg.tol).issues) rep.add("target " + s);
    return finish_validate(report, rep, cfg);
  }
  if (content.contains("coeff")) {
    report["kind"] = "map";
    (void)loader.algebra_map_of(json(path));
    return finish_validate(report, Report{}, cfg);
  }
  if (content.contains("correspondence")) {
    report["kind"] = "presentation";
    const auto e = loader.correspondence(content["correspondence"]);
    Report rep = validate_correspondence(*e, cfg.tol);
    if (content.contains("xi")) {
      FSPresentation p;
      p.e = e;
      p.xi.resize(e->src->G->n_arrows);
      for (const auto& [skey, mat] : content["xi"].items()) {
        std::size_t pos = 0;
        const int x = std::stoi(skey, &pos);
        if (pos != skey.size() || x < 0 || x >= e->src->G->n_arrows || !e->src->G->is_unit(x))
          throw SchemaError("presentation.xi: key \"" + skey + "\" is not a unit");
        p.xi[x] = matrix_from_json(mat, "presentation.xi[" + skey + "]");
      }
      p.zeta = p.xi;
      for (const auto& s : validate_presentation(p, cfg.tol).issues) rep.add(s);
    }
    return finish_validate(report, rep, cfg);
  }
  if (content.contains("groupoid")) {
    report["kind"] = "action";
    const auto act = loader.action(json(path));
    return finish_validate(report, validate_action(*act, cfg.tol), cfg);
  }
  throw SchemaError(path + ": unrecognized instance kind");
}

int cmd_build(const RunConfig& cfg, const std::string& path) {
  JsonLoader loader(fs::current_path());
  const auto act = loader.action(json(path));
  const auto alg = loader.algebra_for(act);
  const Wedderburn w = wedderburn(*alg, cfg.seed);
  json report = report_header(cfg, "build");
  json dims = json::array();
  for (int x : act->G->units) dims.push_back(act->A.at(x));
  report["dims"] = std::move(dims);
  std::vector<int> sizes;
  for (const auto& b : w.blocks) sizes.push_back(b.m);
  std::sort(sizes.begin(), sizes.end());
  json blocks = json::array();
  for (int m : sizes) blocks.push_back(json{{"size", m}});
  report["blocks"] = std::move(blocks);
  report["norms"] = json{{"unit", reduced_norm(*act, unit_section(*act))}};
  return emit(report, cfg, false);
}

int cmd_norm(const RunConfig& cfg, const std::vector<std::string>& paths) {
  JsonLoader loader(fs::current_path());
  const auto act = loader.action(json(paths[0]));
  const json snode = loader.read_file(paths[1]);
  const Section s = loader.section_values(snode, *act, "section");
  json report = report_header(cfg, "norm");
  report["norms"] = json{{"sup", section_sup_norm(s)}, {"reduced", reduced_norm(*act, s)}};
  return emit(report, cfg, true);
}

int cmd_pd(const RunConfig& cfg, const std::vector<std::string>& paths) {
  JsonLoader loader(fs::current_path());
  const Multiplier m = loader.multiplier(object_node(loader, paths));
  json report = report_header(cfg, "pd");
  report["pd"] = is_positive_definite(m, cfg.tol);
  return emit(report, cfg, false);
}

int cmd_dilate(const RunConfig& cfg, const std::vector<std::string>& paths,
               const std::string& out_path) {
  JsonLoader loader(fs::current_path());
  const Multiplier m = loader.multiplier(object_node(loader, paths));
  const FSPresentation p = dilate(m, cfg.tol);
  json report = report_header(cfg, "dilate");
  json ranks = json::array();
  for (int x : m.src->G->units) ranks.push_back(p.e->d_at(x));
  report["dilation"] = json{{"rank_per_unit", std::move(ranks)}};
  if (!out_path.empty()) {
    json file;
    file["correspondence"] = correspondence_to_json(*p.e);
    json xi;
    for (int x : m.src->G->units) xi[std::to_string(x)] = matrix_to_json(p.xi[x]);
    file["xi"] = std::move(xi);
    std::ofstream out(out_path);
    out << file.dump(2) << "\n";
  }
  return emit(report, cfg, false);
}

int cmd_fsnorm(const RunConfig& cfg, const std::vector<std::string>& paths) {
  JsonLoader loader(fs::current_path());
  const Multiplier m = loader.multiplier(object_node(loader, paths));
  json report = report_header(cfg, "fsnorm");
  report["fs_norm"] = fs_norm(m, FsMode::positive_definite, cfg.tol);
  return emit(report, cfg, true);
}

int cmd_decnorm(const RunConfig& cfg, const std::vector<std::string>& paths) {
  JsonLoader loader(fs::current_path());
  const Multiplier m = loader.multiplier(object_node(loader, paths));
  const DecResult r = dec_norm(m, 1e-4, 1e-7, 4000, cfg.seed);
  json report = report_header(cfg, "decnorm");
  report["dec_norm"] = json::array({r.lo, r.hi});
  report["value"] = r.value();
  report["converged"] = r.converged;
  report["residual"] = r.residual;
  const int code = emit(report, cfg, true);
  if (code != 0) return code;
  return r.converged ? 0 : 3;
}

int cmd_haagerup(const RunConfig& cfg, const std::vector<std::string>& paths,
                 const std::string& out_path) {
  JsonLoader loader(fs::current_path());
  const AlgebraMap phi = loader.algebra_map_of(object_node(loader, paths));
  const Multiplier m = haagerup(phi);
  const json file = multiplier_to_json(m);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << file.dump(2) << "\n";
    json report = report_header(cfg, "haagerup");
    report["written"] = out_path;
    return emit(report, cfg, false);
  }
  std::cout << file.dump(2) << "\n";
  return 0;
}

int cmd_absorb(const RunConfig& cfg, const std::vector<std::string>& paths) {
  JsonLoader loader(fs::current_path());
  json node;
  if (paths.size() == 1)
    node = json(paths[0]);
  else {
    node = loader.read_file(paths[1]);
    if (!node.is_object()) throw SchemaError(paths[1] + ": expected an object");
    const std::string act = absolute_path(paths[0]);
    node["source"] = act;
    node["target"] = act;
  }
  const auto e = loader.correspondence(node);
  const FiniteGroupoid& g = *e->src->G;
  std::mt19937_64 rng(cfg.seed);

  json report = report_header(cfg, "absorb");
  for (const bool right : {true, false}) {
    const Absorption ab = right ? absorb_regular_right(*e, cfg.tol * 10)
                                : absorb_regular_left(*e, cfg.tol * 10);
    double unitary = 0.0, intertwine = 0.0, action = 0.0;
    for (int x : g.units) {
      const CMatrix gx = ab.gamma[x];
      unitary = std::max(unitary,
                         (gx.adjoint() * gx - CMatrix::identity(gx.cols)).max_abs());
      const CMatrix a = random_matrix(rng, e->na(x), e->na(x));
      action = std::max(action, (gx * ab.lhs.c.phi(x, a) - ab.rhs.phi(x, a) * gx).max_abs());
    }
    for (int arrow = 0; arrow < g.n_arrows; ++arrow)
      intertwine = std::max(
          intertwine, (ab.gamma[g.rng[arrow]] * ab.lhs.c.P[arrow] -
                       ab.rhs.P[arrow] * ab.gamma[g.src[arrow]])
                          .max_abs());
    report[right ? "right" : "left"] =
        json{{"unitary", unitary}, {"intertwine", intertwine}, {"left_action", action}};
  }

  const FellAbsorption fa = fell_absorption(e, cfg.tol * 10);
  double fell = 0.0;
  for (int x : g.units) {
    ESection xi(g.n_arrows);
    for (int u : g.units) xi[u] = random_matrix(rng, e->d_at(u), e->nb(u));
    const std::size_t nb = e->nb(x);
    const CMatrix b = random_matrix(rng, g.fibre_s(x).size() * nb, nb);
    for (int f = 0; f < g.n_arrows; ++f) {
      const CMatrix a = random_matrix(rng, e->na(g.rng[f]), e->na(g.rng[f]));
      fell = std::max(fell, fell_conjugation_residual(fa, f, a, xi, x, b));
    }
  }
  report["fell"] = json{{"conjugation", fell}};
  return emit(report, cfg, false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-scale laboratory for multipliers of twisted groupoid actions"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  app.add_option("--tol", cfg.tol, "numerical tolerance")->capture_default_str();
  app.add_option("--seed", cfg.seed, "seed for all randomized algorithms")->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "worker count (results do not depend on it)")
      ->capture_default_str();
  app.add_option("--format", cfg.format, "output format: json | csv | human")
      ->capture_default_str();

  std::vector<std::string> paths;
  std::string out_path;
  std::function<int()> action;

  auto one_path = [&](CLI::App* sub) {
    sub->add_option("file", paths, "instance file")->required()->expected(1);
  };
  auto up_to_two = [&](CLI::App* sub, const std::string& desc) {
    sub->add_option("file", paths, desc)->required()->expected(1, 2);
  };

  auto* sv = app.add_subcommand("validate", "check an instance file against its axioms");
  one_path(sv);
  sv->callback([&] { action = [&] { return cmd_validate(cfg, paths[0]); }; });

  auto* sb = app.add_subcommand("build", "assemble the section algebra and factor it");
  one_path(sb);
  sb->callback([&] { action = [&] { return cmd_build(cfg, paths[0]); }; });

  auto* sn = app.add_subcommand("norm", "norms of a section: fslab norm action.json section.json");
  sn->add_option("file", paths, "action file and section file")->required()->expected(2);
  sn->callback([&] { action = [&] { return cmd_norm(cfg, paths); }; });

  auto* sp = app.add_subcommand("pd", "test a multiplier for positive-definiteness");
  up_to_two(sp, "multiplier file, or action file and multiplier file");
  sp->callback([&] { action = [&] { return cmd_pd(cfg, paths); }; });

  auto* sd = app.add_subcommand("dilate", "dilate a positive-definite multiplier");
  up_to_two(sd, "multiplier file, or action file and multiplier file");
  sd->add_option("--out", out_path, "write the presentation to this file");
  sd->callback([&] { action = [&] { return cmd_dilate(cfg, paths, out_path); }; });

  auto* sf = app.add_subcommand("fsnorm", "norm of a positive-definite multiplier");
  up_to_two(sf, "multiplier file, or action file and multiplier file");
  sf->callback([&] { action = [&] { return cmd_fsnorm(cfg, paths); }; });

  auto* sc = app.add_subcommand("decnorm", "decomposable norm bracket of a multiplier");
  up_to_two(sc, "multiplier file, or action file and multiplier file");
  sc->callback([&] { action = [&] { return cmd_decnorm(cfg, paths); }; });

  auto* sh = app.add_subcommand("haagerup", "turn an algebra map into a multiplier file");
  up_to_two(sh, "map file, or action file and map file");
  sh->add_option("--out", out_path, "write the multiplier to this file");
  sh->callback([&] { action = [&] { return cmd_haagerup(cfg, paths, out_path); }; });

  auto* sa = app.add_subcommand("absorb", "absorption residuals of a correspondence");
  up_to_two(sa, "correspondence file, or action file and correspondence file");
  sa->callback([&] { action = [&] { return cmd_absorb(cfg, paths); }; });

  CLI11_PARSE(app, argc, argv);

  try {
    return action();
  } catch (const SchemaError& ex) {
    std::cerr << "schema error: " << ex.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "validation error: " << ex.what() << "\n";
    return 2;
  } catch (const std::logic_error& ex) {
    std::cerr << "internal consistency error: " << ex.what() << "\n";
    return 2;
  } catch (const std::runtime_error& ex) {
    std::cerr << "numerical failure: " << ex.what() << "\n";
    return 3;
  }
}
