#include "fslab/json_io.hpp"

#include <fstream>
#include <utility>

namespace fslab {

namespace {

cd entry_from_json(const json& node, const std::string& where) {
  if (node.is_number()) return cd(node.get<double>(), 0.0);
  if (node.is_array() && node.size() == 2 && node[0].is_number() && node[1].is_number())
    return cd(node[0].get<double>(), node[1].get<double>());
  throw SchemaError(where + ": expected a number or [re, im] pair");
}

int int_field(const json& node, const std::string& key, const std::string& where) {
  if (!node.contains(key) || !node[key].is_number_integer())
    throw SchemaError(where + ": missing integer field \"" + key + "\"");
  return node[key].get<int>();
}

std::vector<int> int_array(const json& node, const std::string& key, const std::string& where) {
  if (!node.contains(key) || !node[key].is_array())
    throw SchemaError(where + ": missing array field \"" + key + "\"");
  std::vector<int> out;
  for (const auto& v : node[key]) {
    if (!v.is_number_integer()) throw SchemaError(where + "." + key + ": expected integers");
    out.push_back(v.get<int>());
  }
  return out;
}

json complex_to_json(cd z) { return json::array({z.real(), z.imag()}); }

// per-unit integer array (d, k, dims) expanded to arrow indexing
std::vector<int> unit_array(const json& node, const std::string& key ,
                            const FiniteGroupoid& g, const std::string& where) {
  const std::vector<int> vals = int_array(node, key, where);
  if (vals.size() != g.units.size())
    throw SchemaError(where + "." + key + ": expected one entry per unit (" +
                      std::to_string(g.units.size()) + "), got " + std::to_string(vals.size()));
  std::vector<int> out(g.n_arrows, 0);
  for (std::size_t i = 0; i < g.units.size(); ++i) {
    if (vals[i] <= 0) throw SchemaError(where + "." + key + ": entries must be positive");
    out[g.units[i]] = vals[i];
  }
  return out;
}

int arrow_key(const std::string& key, int n_arrows, const std::string& where) {
  std::size_t pos = 0;
  int g = -1;
  try {
    g = std::stoi(key, &pos);
  } catch (const std::exception&) {
    throw SchemaError(where + ": key \"" + key + "\" is not an arrow index");
  }
  if (pos != key.size() || g < 0 || g >= n_arrows)
    throw SchemaError(where + ": key \"" + key + "\" is not an arrow index");
  return g;
}

}  // namespace

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& node, const std::string& where) {
  if (!node.is_array() || node.empty() || !node[0].is_array())
    throw SchemaError(where + ": expected a matrix (array of rows)");
  const std::size_t rows = node.size(), cols = node[0].size();
  CMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!node[i].is_array() || node[i].size() != cols)
      throw SchemaError(where + ": row " + std::to_string(i) + " has inconsistent length");
    for (std::size_t j = 0; j < cols; ++j)
      m(i, j) = entry_from_json(node[i][j],
                                where + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  }
  return m;
}

json groupoid_to_json(const FiniteGroupoid& g) {
  json out;
  out["arrows"] = g.n_arrows;
  out["units"] = g.units;
  out["src"] = g.src;
  out["rng"] = g.rng;
  out["inv"] = g.inv;
  json comp = json::array();
  for (int a = 0; a < g.n_arrows; ++a)
    for (int b = 0; b < g.n_arrows; ++b) {
      const int c = g.comp[static_cast<std::size_t>(a) * g.n_arrows + b];
      if (c >= 0) comp.push_back(json::array({a, b, c}));
    }
  out["comp"] = std::move(comp);
  return out;
}

FiniteGroupoid groupoid_from_json(const json& node) {
  const std::string where = "groupoid";
  if (!node.is_object()) throw SchemaError(where + ": expected an object");
  FiniteGroupoid g;
  g.n_arrows = int_field(node, "arrows", where);
  if (g.n_arrows <= 0) throw SchemaError(where + ".arrows: must be positive");
  g.units = int_array(node, "units", where);
  g.src = int_array(node, "src", where);
  g.rng = int_array(node, "rng", where);
  g.inv = int_array(node, "inv", where);
  const auto check_range = [&](const std::vector<int>& v, const std::string& key) {
    if (static_cast<int>(v.size()) != g.n_arrows)
      throw SchemaError(where + "." + key + ": expected " + std::to_string(g.n_arrows) +
                        " entries");
    for (int x : v)
      if (x < 0 || x >= g.n_arrows)
        throw SchemaError(where + "." + key + ": arrow index out of range");
  };
  check_range(g.src, "src");
  check_range(g.rng, "rng");
  check_range(g.inv, "inv");
  for (int x : g.units)
    if (x < 0 || x >= g.n_arrows) throw SchemaError(where + ".units: arrow index out of range");
  if (!node.contains("comp") || !node["comp"].is_array())
    throw SchemaError(where + ": missing array field \"comp\"");
  g.comp.assign(static_cast<std::size_t>(g.n_arrows) * g.n_arrows, -1);
  for (const auto& triple : node["comp"]) {
    if (!triple.is_array() || triple.size() != 3 || !triple[0].is_number_integer() ||
        !triple[1].is_number_integer() || !triple[2].is_number_integer())
      throw SchemaError(where + ".comp: entries must be [g, h, gh] triples");
    const int a = triple[0].get<int>(), b = triple[1].get<int>(), c = triple[2].get<int>();
    if (a < 0 || a >= g.n_arrows || b < 0 || b >= g.n_arrows || c < 0 || c >= g.n_arrows)
      throw SchemaError(where + ".comp: arrow index out of range in [" + std::to_string(a) +
                        ", " + std::to_string(b) + ", " + std::to_string(c) + "]");
    g.comp[static_cast<std::size_t>(a) * g.n_arrows + b] = c;
  }
  g.reindex();
  return g;
}

json action_to_json(const Action& act) {
  const FiniteGroupoid& g = *act.G;
  json out;
  out["groupoid"] = groupoid_to_json(g);
  json dims = json::array();
  for (int x : g.units) dims.push_back(act.A.at(x));
  out["dims"] = std::move(dims);
  json v;
  for (int a = 0; a < g.n_arrows; ++a) v[std::to_string(a)] = matrix_to_json(act.V[a]);
  out["V"] = std::move(v);
  json u;
  for (int a = 0; a < g.n_arrows; ++a)
    for (int b = 0; b < g.n_arrows; ++b)
      if (g.comp[static_cast<std::size_t>(a) * g.n_arrows + b] >= 0) {
        const std::string key = std::to_string(a) + "," + std::to_string(b);
        u[key] = matrix_to_json(act.cocycle(a, b));
      }
  out["u"] = std::move(u);
  return out;
}

json correspondence_to_json(const Correspondence& e) {
  const FiniteGroupoid& g = *e.src->G;
  json out;
  out["source"] = action_to_json(*e.src);
  out["target"] = action_to_json(*e.tgt);
  json d = json::array(), k = json::array();
  for (int x : g.units) {
    d.push_back(e.d_at(x));
    k.push_back(e.k_at(x));
  }
  out["d"] = std::move(d);
  out["k"] = std::move(k);
  json w;
  for (int x : g.units) w[std::to_string(x)] = matrix_to_json(e.W[x]);
  out["W"] = std::move(w);
  json p;
  for (int a = 0; a < g.n_arrows; ++a) p[std::to_string(a)] = matrix_to_json(e.P[a]);
  out["P"] = std::move(p);
  return out;
}

json multiplier_to_json(const Multiplier& m) {
  json out;
  out["source"] = action_to_json(*m.src);
  out["target"] = action_to_json(*m.dst);
  json t;
  for (int g = 0; g < static_cast<int>(m.T.size()); ++g)
    t[std::to_string(g)] = matrix_to_json(m.T[g]);
  out["T"] = std::move(t);
  return out;
}

json section_to_json(const Section& s) {
  json values;
  for (int g = 0; g < static_cast<int>(s.size()); ++g)
    values[std::to_string(g)] = matrix_to_json(s[g]);
  json out;
  out["values"] = std::move(values);
  return out;
}

json JsonLoader::read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  json node;
  try {
    node = json::parse(in);
  } catch (const std::exception& ex) {
    throw SchemaError(path.string() + ": " + ex.what());
  }
  return node;
}

json JsonLoader::fetch(const json& node, std::filesystem::path& dir, std::string& key,
                       const std::string& where) {
  if (node.is_string()) {
    std::filesystem::path p = dir / node.get<std::string>();
    std::error_code ec;
    const std::filesystem::path canon = std::filesystem::weakly_canonical(p, ec);
    if (!ec) p = canon;
    const json content = read_file(p);
    dir = p.parent_path();
    key = p.string();
    return content;
  }
  if (node.is_object()) {
    key = "inline:" + node.dump();
    return node;
  }
  throw SchemaError(where + ": expected an object or a relative path string");
}

std::shared_ptr<const FiniteGroupoid> JsonLoader::groupoid(const json& node) {
  return groupoid_in(node, base_);
}

std::shared_ptr<const FiniteGroupoid> JsonLoader::groupoid_in(const json& node,
                                                              const std::filesystem::path& dir) {
  std::filesystem::path d = dir;
  std::string key;
  const json content = fetch(node, d, key, "groupoid");
  if (auto it = groupoids_.find(key); it != groupoids_.end()) return it->second;
  auto g = std::make_shared<const FiniteGroupoid>(groupoid_from_json(content));
  groupoids_[key] = g;
  return g;
}

std::shared_ptr<const Action> JsonLoader::action(const json& node) {
  return action_in(node, base_);
}

std::shared_ptr<const Action> JsonLoader::action_in(const json& node,
                                                    const std::filesystem::path& dir) {
  std::filesystem::path d = dir;
  std::string key;
  const json content = fetch(node, d, key, "action");
  if (auto it = actions_.find(key); it != actions_.end()) return it->second;
  const std::string where = "action";
  if (!content.contains("groupoid")) throw SchemaError(where + ": missing field \"groupoid\"");
  std::shared_ptr<const FiniteGroupoid> g = groupoid_in(content["groupoid"], d);

  Action act;
  act.G = g;
  act.A.dim = unit_array(content, "dims", *g, where);
  act.V.assign(g->n_arrows, CMatrix());
  for (int x : g->units) act.V[x] = CMatrix::identity(act.A.at(x));
  if (content.contains("V")) {
    if (!content["V"].is_object()) throw SchemaError(where + ".V: expected an object");
    for (const auto& [skey, mat] : content["V"].items()) {
      const int a = arrow_key(skey, g->n_arrows, where + ".V");
      act.V[a] = matrix_from_json(mat, where + ".V[" + skey + "]");
    }
  }
  for (int a = 0; a < g->n_arrows; ++a) {
    const std::size_t n = act.A.at(g->rng[a]);
    if (act.V[a].rows == 0 && !g->is_unit(a))
      throw SchemaError(where + ".V: missing entry for arrow " + std::to_string(a));
    if (act.V[a].rows != n || act.V[a].cols != n)
      throw SchemaError(where + ".V[" + std::to_string(a) + "]: expected a " + std::to_string(n) +
                        "x" + std::to_string(n) + " matrix");
  }
  if (content.contains("u")) {
    if (!content["u"].is_object()) throw SchemaError(where + ".u: expected an object");
    for (const auto& [skey, mat] : content["u"].items()) {
      const auto comma = skey.find(',');
      if (comma == std::string::npos)
        throw SchemaError(where + ".u: key \"" + skey + "\" is not a \"g,h\" pair");
      const int a = arrow_key(skey.substr(0, comma), g->n_arrows, where + ".u");
      const int b = arrow_key(skey.substr(comma + 1), g->n_arrows, where + ".u");
      if (g->comp[static_cast<std::size_t>(a) * g->n_arrows + b] < 0)
        throw SchemaError(where + ".u[" + skey + "]: arrows are not composable");
      const CMatrix m = matrix_from_json(mat, where + ".u[" + skey + "]");
      const std::size_t n = act.A.at(g->rng[a]);
      if (m.rows != n || m.cols != n)
        throw SchemaError(where + ".u[" + skey + "]: expected a " + std::to_string(n) + "x" +
                          std::to_string(n) + " matrix");
      act.u[pair_key(a, b)] = m;
    }
  }
  // composable pairs without an explicit entry carry the trivial twist
  for (int a = 0; a < g->n_arrows; ++a)
    for (int b = 0; b < g->n_arrows; ++b)
      if (g->comp[static_cast<std::size_t>(a) * g->n_arrows + b] >= 0 &&
          act.u.find(pair_key(a, b)) == act.u.end())
        act.u[pair_key(a, b)] = CMatrix::identity(act.A.at(g->rng[a]));

  auto sp = std::make_shared<const Action>(std::move(act));
  actions_[key] = sp;
  return sp;
}

std::pair<std::shared_ptr<const Action>, std::shared_ptr<const Action>> JsonLoader::action_pair(
    const json& content, const std::filesystem::path& dir, const std::string& where) {
  if (!content.contains("source") || !content.contains("target"))
    throw SchemaError(where + ": missing field \"source\" or \"target\"");
  auto src = action_in(content["source"], dir);
  auto dst = action_in(content["target"], dir);
  if (src->G.get() != dst->G.get())
    throw SchemaError(where + ": source and target must share one groupoid instance");
  return {std::move(src), std::move(dst)};
}

std::shared_ptr<const Correspondence> JsonLoader::correspondence(const json& node) {
  std::filesystem::path dir = base_;
  std::string key;
  const json content = fetch(node, dir, key, "correspondence");
  const std::string where = "correspondence";
  Correspondence e;
  std::tie(e.src, e.tgt) = action_pair(content, dir, where);
  const FiniteGroupoid& g = *e.src->G;
  e.d = unit_array(content, "d", g, where);
  e.k = unit_array(content, "k", g, where);
  e.W.assign(g.n_arrows, CMatrix());
  e.P.assign(g.n_arrows, CMatrix());
  if (!content.contains("W") || !content["W"].is_object())
    throw SchemaError(where + ": missing object field \"W\"");
  for (const auto& [skey, mat] : content["W"].items()) {
    const int x = arrow_key(skey, g.n_arrows, where + ".W");
    if (!g.is_unit(x)) throw SchemaError(where + ".W: key " + skey + " is not a unit");
    e.W[x] = matrix_from_json(mat, where + ".W[" + skey + "]");
  }
  for (int x : g.units) {
    const std::size_t d = e.d[x], nk = static_cast<std::size_t>(e.na(x)) * e.k[x];
    if (e.W[x].rows != d || e.W[x].cols != nk)
      throw SchemaError(where + ".W[" + std::to_string(x) + "]: expected a " + std::to_string(d) +
                        "x" + std::to_string(nk) + " matrix");
  }
  if (content.contains("P")) {
    if (!content["P"].is_object()) throw SchemaError(where + ".P: expected an object");
    for (const auto& [skey, mat] : content["P"].items()) {
      const int a = arrow_key(skey, g.n_arrows, where + ".P");
      e.P[a] = matrix_from_json(mat, where + ".P[" + skey + "]");
    }
  }
  for (int a = 0; a < g.n_arrows; ++a) {
    if (g.is_unit(a) && e.P[a].rows == 0) e.P[a] = CMatrix::identity(e.d[a]);
    const std::size_t dr = e.d[g.rng[a]], ds = e.d[g.src[a]];
    if (e.P[a].rows != dr || e.P[a].cols != ds)
      throw SchemaError(where + ".P[" + std::to_string(a) + "]: expected a " + std::to_string(dr) +
                        "x" + std::to_string(ds) + " matrix");
  }
  return std::make_shared<const Correspondence>(std::move(e));
}

Multiplier JsonLoader::multiplier(const json& node) {
  std::filesystem::path dir = base_;
  std::string key;
  const json content = fetch(node, dir, key, "multiplier");
  const std::string where = "multiplier";
  auto [src, dst] = action_pair(content, dir, where);
  Multiplier m = zero_multiplier(src, dst);
  if (!content.contains("T") || !content["T"].is_object())
    throw SchemaError(where + ": missing object field \"T\"");
  const FiniteGroupoid& g = *src->G;
  for (const auto& [skey, mat] : content["T"].items()) {
    const int a = arrow_key(skey, g.n_arrows, where + ".T");
    const CMatrix t = matrix_from_json(mat, where + ".T[" + skey + "]");
    if (t.rows != m.T[a].rows || t.cols != m.T[a].cols)
      throw SchemaError(where + ".T[" + skey + "]: expected a " + std::to_string(m.T[a].rows) +
                        "x" + std::to_string(m.T[a].cols) + " matrix");
    m.T[a] = t;
  }
  return m;
}

AlgebraMap JsonLoader::algebra_map_of(const json& node) {
  std::filesystem::path dir = base_;
  std::string key;
  const json content = fetch(node, dir, key, "map");
  const std::string where = "map";
  auto [src, dst] = action_pair(content, dir, where);
  AlgebraMap phi;
  phi.src = algebra_for(src);
  phi.dst = algebra_for(dst);
  if (!content.contains("coeff"))
    throw SchemaError(where + ": missing matrix field \"coeff\"");
  phi.coeff = matrix_from_json(content["coeff"], where + ".coeff");
  if (phi.coeff.rows != phi.dst->dim() || phi.coeff.cols != phi.src->dim())
    throw SchemaError(where + ".coeff: expected a " + std::to_string(phi.dst->dim()) + "x" +
                      std::to_string(phi.src->dim()) + " matrix");
  return phi;
}

Section JsonLoader::section_values(const json& node, const Action& act, const std::string& where) {
  const json* values = &node;
  if (node.is_object() && node.contains("values")) values = &node["values"];
  if (!values->is_object()) throw SchemaError(where + ": expected an object of arrow entries");
  Section s = zero_section(act);
  for (const auto& [skey, mat] : values->items()) {
    const int a = arrow_key(skey, act.G->n_arrows, where);
    const CMatrix v = matrix_from_json(mat, where + "[" + skey + "]");
    const std::size_t n = act.fibre_dim(a);
    if (v.rows != n || v.cols != n)
      throw SchemaError(where + "[" + skey + "]: expected a " + std::to_string(n) + "x" +
                        std::to_string(n) + " matrix");
    s[a] = v;
  }
  return s;
}

std::shared_ptr<const ConcreteAlgebra> JsonLoader::algebra_for(
    const std::shared_ptr<const Action>& act) {
  if (auto it = algebras_.find(act.get()); it != algebras_.end()) return it->second;
  auto alg = std::make_shared<const ConcreteAlgebra>(crossed_algebra(act));
  algebras_[act.get()] = alg;
  return alg;
}

}  // namespace fslab
