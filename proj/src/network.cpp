#include "wdn/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace wdn {

using nlohmann::json;

std::vector<int> NetworkGraph::links_incident(int node) const {
  std::vector<int> out = in_[node];
  out.insert(out.end(), out_[node].begin(), out_[node].end());
  return out;
}

int NetworkGraph::total_grid_points() const {
  int jbar = 0;
  for (const Link& l : links) jbar += 1 + l.segments;
  return jbar;
}

void NetworkGraph::rebuild_incidence() {
  in_.assign(nodes.size(), {});
  out_.assign(nodes.size(), {});
  for (int l = 0; l < n_p(); ++l) {
    if (!links[l].from.is_source) out_[links[l].from.index].push_back(l);
    if (!links[l].to.is_source) in_[links[l].to.index].push_back(l);
  }
}

void NetworkGraph::validate() const {
  if (n_t < 1) throw InputError("meta.n_t must be >= 1");
  if (dt <= 0.0) throw InputError("meta.dt must be > 0");
  if (nodes.empty()) throw InputError("network needs at least one demand node");
  if (sources.empty()) throw InputError("network needs at least one source");
  if (links.empty()) throw InputError("network needs at least one link");

  auto check_len = [&](const std::vector<double>& v, const std::string& what) {
    if (static_cast<int>(v.size()) != n_t) {
      throw InputError(what + ": expected " + std::to_string(n_t) + " entries, got " +
                       std::to_string(v.size()));
    }
  };
  for (const Node& n : nodes) {
    check_len(n.demand, "node " + n.id + " demand");
    check_len(n.h_min, "node " + n.id + " h_min");
    check_len(n.h_max, "node " + n.id + " h_max");
    for (int k = 0; k < n_t; ++k) {
      if (n.demand[k] < 0.0) throw InputError("node " + n.id + ": negative demand at step " + std::to_string(k + 1));
      if (n.h_min[k] > n.h_max[k]) throw InputError("node " + n.id + ": h_min > h_max at step " + std::to_string(k + 1));
    }
    if (n.c_max <= 0.0) throw InputError("node " + n.id + ": c_max must be > 0");
    if (n.c0 < 0.0) throw InputError("node " + n.id + ": c0 must be >= 0");
  }
  for (const SourceNode& s : sources) {
    check_len(s.h0, "source " + s.id + " h0");
    if (s.c_max <= 0.0) throw InputError("source " + s.id + ": c_max must be > 0");
  }
  for (const Link& l : links) {
    if (l.length <= 0.0) throw InputError("link " + l.id + ": length must be > 0");
    if (l.diameter <= 0.0) throw InputError("link " + l.id + ": diameter must be > 0");
    if (l.roughness <= 0.0) throw InputError("link " + l.id + ": roughness must be > 0");
    if (l.decay < 0.0) throw InputError("link " + l.id + ": decay must be >= 0");
    if (l.segments < 1) throw InputError("link " + l.id + ": segments must be >= 1");
    check_len(l.q_min, "link " + l.id + " q_min");
    check_len(l.q_max, "link " + l.id + " q_max");
    check_len(l.eta_min, "link " + l.id + " eta_min");
    check_len(l.eta_max, "link " + l.id + " eta_max");
    for (int k = 0; k < n_t; ++k) {
      if (l.q_min[k] > l.q_max[k]) throw InputError("link " + l.id + ": q_min > q_max at step " + std::to_string(k + 1));
      if (l.eta_min[k] > l.eta_max[k]) throw InputError("link " + l.id + ": eta_min > eta_max at step " + std::to_string(k + 1));
    }
    if (l.from.is_source == l.to.is_source && l.from.index == l.to.index) {
      throw InputError("link " + l.id + ": endpoints must be distinct");
    }
  }
}

namespace {

std::vector<double> broadcast(const json& v, int n_t, const std::string& what) {
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(n_t, v.get<double>());
  } else if (v.is_array()) {
    if (static_cast<int>(v.size()) != n_t) {
      throw InputError(what + ": array length " + std::to_string(v.size()) +
                       " does not match n_t=" + std::to_string(n_t));
    }
    for (const auto& e : v) {
      if (!e.is_number()) throw InputError(what + ": array entries must be numbers");
      out.push_back(e.get<double>());
    }
  } else {
    throw InputError(what + ": expected number or array");
  }
  return out;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& what) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw InputError(what + "." + key + ": expected number");
  return obj[key].get<double>();
}

}  // namespace

NetworkGraph parse_network(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(origin + ": JSON parse error: " + e.what());
  }
  if (!doc.is_object()) throw InputError(origin + ": top level must be an object");
  if (!doc.contains("meta") || !doc.contains("nodes") || !doc.contains("sources") ||
      !doc.contains("links")) {
    throw InputError(origin + ": requires keys meta, nodes, sources, links");
  }

  NetworkGraph net;
  const json& meta = doc["meta"];
  if (!meta.contains("n_t")) throw InputError(origin + ": meta.n_t missing");
  net.n_t = meta["n_t"].get<int>();
  net.dt = number_or(meta, "dt", 3600.0, "meta");
  if (net.n_t < 1) throw InputError(origin + ": meta.n_t must be >= 1");

  std::map<std::string, EndpointRef> by_id;

  for (const json& jn : doc["nodes"]) {
    Node n;
    if (!jn.contains("id")) throw InputError(origin + ": node without id");
    n.id = jn["id"].get<std::string>();
    std::string what = "node " + n.id;
    if (by_id.count(n.id)) throw InputError(origin + ": duplicate id " + n.id);
    n.elevation = number_or(jn, "elev", 0.0, what);
    if (!jn.contains("demand")) throw InputError(what + ": demand missing");
    n.demand = broadcast(jn["demand"], net.n_t, what + ".demand");
    if (!jn.contains("h_min") || !jn.contains("h_max")) {
      throw InputError(what + ": h_min/h_max missing");
    }
    n.h_min = broadcast(jn["h_min"], net.n_t, what + ".h_min");
    n.h_max = broadcast(jn["h_max"], net.n_t, what + ".h_max");
    n.c_max = number_or(jn, "c_max", 2.0, what);
    n.c0 = number_or(jn, "c0", 0.0, what);
    n.c_target = number_or(jn, "c_target", 1.0, what);
    by_id[n.id] = EndpointRef{false, static_cast<int>(net.nodes.size())};
    net.nodes.push_back(std::move(n));
  }

  for (const json& js : doc["sources"]) {
    SourceNode s;
    if (!js.contains("id")) throw InputError(origin + ": source without id");
    s.id = js["id"].get<std::string>();
    std::string what = "source " + s.id;
    if (by_id.count(s.id)) throw InputError(origin + ": duplicate id " + s.id);
    if (!js.contains("h0")) throw InputError(what + ": h0 missing");
    s.h0 = broadcast(js["h0"], net.n_t, what + ".h0");
    s.c_max = number_or(js, "c_max", 0.5, what);
    s.c0 = number_or(js, "c0", 0.0, what);
    by_id[s.id] = EndpointRef{true, static_cast<int>(net.sources.size())};
    net.sources.push_back(std::move(s));
  }

  // Default valve head-loss box: +/- the largest head range seen in the data.
  double head_lo = kInf, head_hi = -kInf;
  for (const Node& n : net.nodes) {
    for (int k = 0; k < net.n_t; ++k) {
      head_lo = std::min(head_lo, n.h_min[k]);
      head_hi = std::max(head_hi, n.h_max[k]);
    }
  }
  for (const SourceNode& s : net.sources) {
    for (int k = 0; k < net.n_t; ++k) {
      head_lo = std::min(head_lo, s.h0[k]);
      head_hi = std::max(head_hi, s.h0[k]);
    }
  }
  double span = std::max(1.0, head_hi - head_lo);

  for (const json& jl : doc["links"]) {
    Link l;
    if (!jl.contains("id")) throw InputError(origin + ": link without id");
    l.id = jl["id"].get<std::string>();
    std::string what = "link " + l.id;
    if (by_id.count(l.id)) throw InputError(origin + ": duplicate id " + l.id);
    by_id[l.id] = EndpointRef{false, -1};  // reserve the id
    for (const char* key : {"from", "to", "length", "diameter", "roughness", "decay", "q_min", "q_max"}) {
      if (!jl.contains(key)) throw InputError(what + ": " + key + " missing");
    }
    std::string from = jl["from"].get<std::string>(), to = jl["to"].get<std::string>();
    auto itf = by_id.find(from);
    if (itf == by_id.end() || itf->second.index < 0) {
      throw InputError(what + ": endpoint '" + from + "' is not a known node or source");
    }
    auto itt = by_id.find(to);
    if (itt == by_id.end() || itt->second.index < 0) {
      throw InputError(what + ": endpoint '" + to + "' is not a known node or source");
    }
    l.from = itf->second;
    l.to = itt->second;
    l.length = number_or(jl, "length", 0.0, what);
    l.diameter = number_or(jl, "diameter", 0.0, what);
    l.roughness = number_or(jl, "roughness", 0.0, what);
    l.decay = number_or(jl, "decay", 0.0, what);
    l.segments = static_cast<int>(number_or(jl, "segments", 2, what));
    l.q_min = broadcast(jl["q_min"], net.n_t, what + ".q_min");
    l.q_max = broadcast(jl["q_max"], net.n_t, what + ".q_max");
    l.eta_min = jl.contains("eta_min") ? broadcast(jl["eta_min"], net.n_t, what + ".eta_min")
                                       : std::vector<double>(net.n_t, -span);
    l.eta_max = jl.contains("eta_max") ? broadcast(jl["eta_max"], net.n_t, what + ".eta_max")
                                       : std::vector<double>(net.n_t, span);
    net.links.push_back(std::move(l));
  }

  net.rebuild_incidence();
  net.validate();
  return net;
}

NetworkGraph load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open network file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str(), path);
}

std::string save_network(const NetworkGraph& net) {
  json doc;
  doc["meta"] = {{"n_t", net.n_t}, {"dt", net.dt}};
  doc["nodes"] = json::array();
  for (const Node& n : net.nodes) {
    doc["nodes"].push_back({{"id", n.id},
                            {"elev", n.elevation},
                            {"demand", n.demand},
                            {"h_min", n.h_min},
                            {"h_max", n.h_max},
                            {"c_max", n.c_max},
                            {"c0", n.c0},
                            {"c_target", n.c_target}});
  }
  doc["sources"] = json::array();
  for (const SourceNode& s : net.sources) {
    doc["sources"].push_back({{"id", s.id}, {"h0", s.h0}, {"c_max", s.c_max}, {"c0", s.c0}});
  }
  doc["links"] = json::array();
  for (const Link& l : net.links) {
    const std::string& from = l.from.is_source ? net.sources[l.from.index].id : net.nodes[l.from.index].id;
    const std::string& to = l.to.is_source ? net.sources[l.to.index].id : net.nodes[l.to.index].id;
    doc["links"].push_back({{"id", l.id},
                            {"from", from},
                            {"to", to},
                            {"length", l.length},
                            {"diameter", l.diameter},
                            {"roughness", l.roughness},
                            {"decay", l.decay},
                            {"segments", l.segments},
                            {"q_min", l.q_min},
                            {"q_max", l.q_max},
                            {"eta_min", l.eta_min},
                            {"eta_max", l.eta_max}});
  }
  return doc.dump(2);
}

std::vector<double> azp_weights(const NetworkGraph& net) {
  std::vector<double> incident(net.n_n(), 0.0);
  for (const Link& l : net.links) {
    if (!l.from.is_source) incident[l.from.index] += l.length;
    if (!l.to.is_source) incident[l.to.index] += l.length;
  }
  double total = 0.0;
  for (double v : incident) total += v;
  if (total <= 0.0) throw InputError("azp_weights: no demand node touches any link");
  std::vector<double> w(net.n_n());
  for (int i = 0; i < net.n_n(); ++i) w[i] = incident[i] / (net.n_t * total);
  return w;
}

Array2 atd_weights(const NetworkGraph& net) {
  double total = 0.0;
  for (const Node& n : net.nodes) {
    for (double d : n.demand) total += d;
  }
  if (total <= 0.0) throw SolveError("atd_weights: total demand is zero; ATD is undefined");
  Array2 w(net.n_n(), net.n_t);
  for (int i = 0; i < net.n_n(); ++i) {
    for (int k = 0; k < net.n_t; ++k) w(i, k) = net.nodes[i].demand[k] / total;
  }
  return w;
}

ProblemSize problem_size(const NetworkGraph& net) {
  long np = net.n_p(), nn = net.n_n(), n0 = net.n_0(), nt = net.n_t;
  long jbar = net.total_grid_points();
  ProblemSize s;
  s.continuous = nt * (8 * np + 4 * nn + 2 * jbar + n0);
  s.binary = nt * np + 2 * np + nn;
  s.nonconvex = nt * (2 * np + jbar);
  return s;
}

void ProblemConfig::validate(const NetworkGraph& net) const {
  if (n_v < 0 || n_v > 2 * net.n_p()) {
    throw InputError("n_v must be in [0, " + std::to_string(2 * net.n_p()) + "]");
  }
  if (n_b < 0 || n_b > net.n_n()) {
    throw InputError("n_b must be in [0, " + std::to_string(net.n_n()) + "]");
  }
  if (m < 2) throw InputError("m must be >= 2");
  if (eps_tol <= 0.0) throw InputError("eps_tol must be > 0");
  if (i_max < 1) throw InputError("i_max must be >= 1");
}

}  // namespace wdn
