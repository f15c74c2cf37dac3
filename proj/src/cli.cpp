#include "wdn/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wdn/rtr.hpp"

namespace wdn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool timings_enabled() {
  const char* v = std::getenv("WDNRTR_TIMINGS");
  return v != nullptr && v[0] == '1';
}

/// Wall-clock fields in CSVs default to 0 so repeated runs diff clean;
/// WDNRTR_TIMINGS=1 fills them in. result.json always carries the real time.
double csv_time(double seconds) { return timings_enabled() ? seconds : 0.0; }

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw InputError("cannot write " + p.string());
  os.precision(12);
  return os;
}

struct CommonArgs {
  std::string network;
  std::string out_dir = ".";
  int n_v = 0, n_b = 0, m = 5, i_max = 10, threads = 1, sweeps = 1;
  double eps_tol = 1e-2;
  long seed = 0;
};

ProblemConfig to_config(const CommonArgs& a) {
  ProblemConfig c;
  c.n_v = a.n_v;
  c.n_b = a.n_b;
  c.m = a.m;
  c.eps_tol = a.eps_tol;
  c.i_max = a.i_max;
  return c;
}

int cmd_build(const CommonArgs& args) {
  NetworkGraph net = load_network(args.network);
  ProblemSize size = problem_size(net);
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox bounds = BoundsBox::from_network(net, coeffs);
  RelaxationBuild rel = assemble_relaxation(net, coeffs, bounds, args.m, args.n_v, args.n_b);

  std::cout << "continuous " << size.continuous << "\n"
            << "binary " << size.binary << "\n"
            << "nonconvex " << size.nonconvex << "\n"
            << "relaxation_rows " << rel.lp.num_rows() << "\n"
            << "relaxation_cols " << rel.lp.num_vars() << "\n"
            << "relaxation_cuts " << rel.cuts.rows.size() << "\n";

  if (args.out_dir != ".") {
    fs::create_directories(args.out_dir);
    json doc = {{"continuous", size.continuous},
                {"binary", size.binary},
                {"nonconvex", size.nonconvex},
                {"relaxation_rows", rel.lp.num_rows()},
                {"relaxation_cols", rel.lp.num_vars()},
                {"relaxation_cuts", rel.cuts.rows.size()}};
    open_out(fs::path(args.out_dir) / "build.json") << doc.dump(2) << "\n";
  }
  return 0;
}

void write_result_files(const NetworkGraph& net, const CommonArgs& args, const RtrResult& res) {
  fs::create_directories(args.out_dir);
  fs::path dir(args.out_dir);

  json doc;
  doc["status"] = to_string(res.status);
  doc["lb"] = res.lb;
  if (res.has_ub) {
    doc["ub"] = res.ub;
    doc["azp"] = res.f_azp;
    doc["atd"] = res.f_atd;
  } else {
    doc["ub"] = nullptr;
  }
  if (res.gap_percent.has_value()) {
    doc["gap_percent"] = *res.gap_percent;
  } else {
    doc["gap_percent"] = nullptr;
    if (res.has_ub) doc["gap_absolute"] = res.ub - res.lb;
  }
  doc["message"] = res.message;
  doc["wall_seconds"] = res.wall_seconds;
  doc["config"] = {{"network", args.network}, {"n_v", args.n_v},       {"n_b", args.n_b},
                   {"m", args.m},             {"eps_tol", args.eps_tol}, {"i_max", args.i_max},
                   {"threads", args.threads}, {"seed", args.seed}};
  if (res.has_ub) {
    json valves = json::array();
    for (int l = 0; l < net.n_p(); ++l) {
      if (res.valves.v[l]) valves.push_back({{"link", net.links[l].id}, {"direction", "positive"}});
      if (res.valves.v[net.n_p() + l]) {
        valves.push_back({{"link", net.links[l].id}, {"direction", "negative"}});
      }
    }
    doc["valves"] = valves;
    json boosters = json::array();
    for (int i = 0; i < net.n_n(); ++i) {
      if (res.boosters[i]) boosters.push_back(net.nodes[i].id);
    }
    doc["boosters"] = boosters;
  }
  json trace = json::array();
  for (const RtrIteration& it : res.trace) {
    trace.push_back({{"i", it.i},
                     {"lb", it.lb},
                     {"nlp_ok", it.nlp_ok},
                     {"f_azp", it.nlp_ok ? json(it.f_azp) : json(nullptr)},
                     {"obbt_ran", it.obbt_ran},
                     {"obbt_seconds", it.obbt_seconds},
                     {"lp_rows", it.lp_rows},
                     {"lp_cols", it.lp_cols}});
  }
  doc["trace"] = trace;
  open_out(dir / "result.json") << doc.dump(2) << "\n";

  {
    auto os = open_out(dir / "result.csv");
    os << "n_v,n_b,gap_percent,ub,lb,cpu_time_s\n";
    os << args.n_v << ',' << args.n_b << ',';
    if (res.gap_percent.has_value()) {
      os << *res.gap_percent;
    } else {
      os << '-';
    }
    os << ',';
    if (res.has_ub) {
      os << res.ub;
    } else {
      os << '-';
    }
    os << ',' << res.lb << ',' << csv_time(res.wall_seconds) << "\n";
  }

  {
    auto os = open_out(dir / "trace.csv");
    os << "iteration,lb,f_azp,obbt_ran,obbt_time_s,lp_rows,lp_cols\n";
    for (const RtrIteration& it : res.trace) {
      os << it.i << ',' << it.lb << ',';
      if (it.nlp_ok) {
        os << it.f_azp;
      } else {
        os << '-';
      }
      os << ',' << (it.obbt_ran ? 1 : 0) << ',' << csv_time(it.obbt_seconds) << ','
         << it.lp_rows << ',' << it.lp_cols << "\n";
    }
  }

  if (res.has_ub) {
    std::vector<int> link_order(net.n_p()), node_order(net.n_n()), source_order(net.n_0());
    for (int i = 0; i < net.n_p(); ++i) link_order[i] = i;
    for (int i = 0; i < net.n_n(); ++i) node_order[i] = i;
    for (int i = 0; i < net.n_0(); ++i) source_order[i] = i;
    std::sort(link_order.begin(), link_order.end(),
              [&](int a, int b) { return net.links[a].id < net.links[b].id; });
    std::sort(node_order.begin(), node_order.end(),
              [&](int a, int b) { return net.nodes[a].id < net.nodes[b].id; });
    std::sort(source_order.begin(), source_order.end(),
              [&](int a, int b) { return net.sources[a].id < net.sources[b].id; });

    {
      auto os = open_out(dir / "valves.csv");
      os << "link_id,time,eta\n";
      for (int l : link_order) {
        for (int k = 0; k < net.n_t; ++k) {
          os << net.links[l].id << ',' << (k + 1) << ',' << res.hyd.eta(l, k) << "\n";
        }
      }
    }
    {
      auto os = open_out(dir / "flows.csv");
      os << "link_id,time,q\n";
      for (int l : link_order) {
        for (int k = 0; k < net.n_t; ++k) {
          os << net.links[l].id << ',' << (k + 1) << ',' << res.hyd.q(l, k) << "\n";
        }
      }
    }
    {
      auto os = open_out(dir / "boosters.csv");
      os << "node_id,time,xi\n";
      for (int i : node_order) {
        for (int k = 0; k < net.n_t; ++k) {
          os << net.nodes[i].id << ',' << (k + 1) << ',' << res.qual.xi(i, k) << "\n";
        }
      }
    }
    {
      auto os = open_out(dir / "sources.csv");
      os << "source_id,time,c\n";
      for (int s : source_order) {
        for (int k = 0; k < net.n_t; ++k) {
          os << net.sources[s].id << ',' << (k + 1) << ',' << res.qual.c(net.n_n() + s, k)
             << "\n";
        }
      }
    }
  }
}

int cmd_solve(const CommonArgs& args) {
  NetworkGraph net = load_network(args.network);
  ProblemConfig config = to_config(args);
  config.validate(net);
  RtrOptions opts;
  opts.obbt_threads = args.threads;
  RtrResult res = run_rtr(net, config, opts);
  write_result_files(net, args, res);
  std::cout << "status " << to_string(res.status) << "\n";
  std::cout << "lb " << res.lb << "\n";
  if (res.has_ub) {
    std::cout << "ub " << res.ub << "\n";
    if (res.gap_percent.has_value()) std::cout << "gap_percent " << *res.gap_percent << "\n";
  }
  return res.status == RtrStatus::ok ? 0 : 1;
}

int cmd_obbt(const CommonArgs& args) {
  NetworkGraph net = load_network(args.network);
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox bounds = BoundsBox::from_network(net, coeffs);

  fs::create_directories(args.out_dir);
  ObbtReport last;
  last.entries.resize(static_cast<std::size_t>(net.n_p()) * net.n_t);
  for (int l = 0; l < net.n_p(); ++l) {
    for (int k = 0; k < net.n_t; ++k) {
      ObbtEntry& e = last.entries[l * net.n_t + k];
      e.link = l;
      e.k = k;
      e.old_lo = e.new_lo = bounds.q_lo(l, k);
      e.old_hi = e.new_hi = bounds.q_hi(l, k);
      e.status_min = e.status_max = LpStatus::optimal;
    }
  }
  double total_seconds = 0.0;
  ObbtOptions opts;
  opts.threads = args.threads;
  for (int sweep = 0; sweep < args.sweeps; ++sweep) {
    ObbtOutcome out = tighten_flow_bounds(net, coeffs, bounds, args.m, args.n_v, opts);
    bounds = std::move(out.bounds);
    total_seconds += out.report.wall_seconds;
    if (sweep == 0) {
      last = std::move(out.report);
    } else {
      // keep the first sweep's old bounds as the reference interval
      for (std::size_t t = 0; t < last.entries.size(); ++t) {
        last.entries[t].new_lo = out.report.entries[t].new_lo;
        last.entries[t].new_hi = out.report.entries[t].new_hi;
        last.entries[t].status_min = out.report.entries[t].status_min;
        last.entries[t].status_max = out.report.entries[t].status_max;
      }
    }
  }
  last.wall_seconds = total_seconds;

  auto os = open_out(fs::path(args.out_dir) / "bounds.csv");
  write_obbt_csv(net, last, os);
  std::cout << "sweeps " << args.sweeps << "\n";
  log::info("obbt total wall seconds: " + std::to_string(total_seconds));
  return 0;
}

int cmd_simulate_quality(const CommonArgs& args, const std::string& flows_path, bool warmup) {
  NetworkGraph net = load_network(args.network);
  HeadlossCoefficients coeffs = fit_all_headloss(net);

  HydraulicState hyd;
  if (!flows_path.empty()) {
    // Flow schedule from a prior solve: columns link_id,time,q.
    std::ifstream in(flows_path);
    if (!in) {
      throw InputError("hydraulic schedule not found: " + flows_path +
                       " (run `wdnrtr solve` first or omit --flows to compute one)");
    }
    hyd.q = Array2(net.n_p(), net.n_t);
    hyd.s = Array2(net.n_p(), net.n_t);
    hyd.z = Array2(net.n_p(), net.n_t);
    std::string line;
    std::getline(in, line);  // header
    std::map<std::string, int> link_by_id;
    for (int l = 0; l < net.n_p(); ++l) link_by_id[net.links[l].id] = l;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string id, ktok, qtok;
      if (!std::getline(ls, id, ',') || !std::getline(ls, ktok, ',') ||
          !std::getline(ls, qtok, ',')) {
        throw InputError("flows csv: malformed line: " + line);
      }
      auto it = link_by_id.find(id);
      if (it == link_by_id.end()) throw InputError("flows csv: unknown link id " + id);
      int k = std::stoi(ktok) - 1;
      if (k < 0 || k >= net.n_t) throw InputError("flows csv: time out of range in: " + line);
      double q = std::stod(qtok);
      AuxValues u = recover_aux(q, 0.0);
      hyd.q(it->second, k) = q;
      hyd.s(it->second, k) = u.s;
      hyd.z(it->second, k) = u.z;
    }
  } else {
    ValvePlacement none;
    none.v.assign(2 * net.n_p(), 0);
    NlpResult nlp = solve_fixed_valve_nlp(net, coeffs, none);
    if (!nlp.feasible) {
      throw SolveError("network analysis (no valves) failed: " + nlp.message);
    }
    hyd = std::move(nlp.state);
  }

  fs::create_directories(args.out_dir);
  if (warmup) {
    std::vector<double> c0 = warmup_initial_concentrations(net, hyd);
    auto os = open_out(fs::path(args.out_dir) / "warmup.csv");
    os << "entity_kind,entity_id,c0\n";
    std::vector<int> node_order(net.n_n());
    for (int i = 0; i < net.n_n(); ++i) node_order[i] = i;
    std::sort(node_order.begin(), node_order.end(),
              [&](int a, int b) { return net.nodes[a].id < net.nodes[b].id; });
    for (int i : node_order) os << "node," << net.nodes[i].id << ',' << c0[i] << "\n";
    std::vector<int> source_order(net.n_0());
    for (int i = 0; i < net.n_0(); ++i) source_order[i] = i;
    std::sort(source_order.begin(), source_order.end(),
              [&](int a, int b) { return net.sources[a].id < net.sources[b].id; });
    for (int s : source_order) {
      os << "source," << net.sources[s].id << ',' << c0[net.n_n() + s] << "\n";
    }
    std::cout << "warmup written\n";
    return 0;
  }

  Array2 source_c(net.n_0(), net.n_t);
  for (int s = 0; s < net.n_0(); ++s) {
    for (int k = 0; k < net.n_t; ++k) source_c(s, k) = net.sources[s].c_max;
  }
  QualityState qs = simulate_quality(net, hyd, source_c);
  auto os = open_out(fs::path(args.out_dir) / "trajectory.csv");
  write_trajectory_csv(net, qs, os);
  std::cout << "trajectory written\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"wdnrtr: joint valve placement and chlorine booster planning for water networks"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string flows_path;
  bool warmup = false;

  auto add_common = [&](CLI::App* cmd, bool with_planning) {
    cmd->add_option("--network", common.network, "network JSON file")->required();
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_option("--threads", common.threads, "bound-tightening thread cap");
    if (with_planning) {
      cmd->add_option("--nv", common.n_v, "valves to place");
      cmd->add_option("--nb", common.n_b, "boosters to place");
      cmd->add_option("--m", common.m, "tangent points per quadratic relaxation");
      cmd->add_option("--eps-tol", common.eps_tol, "lower-bound change tolerance");
      cmd->add_option("--imax", common.i_max, "iteration cap");
      cmd->add_option("--seed", common.seed, "seed recorded in run metadata");
    }
  };

  CLI::App* build = app.add_subcommand("build", "load a network and report problem sizes");
  add_common(build, true);
  CLI::App* solve = app.add_subcommand("solve", "run the relax-tighten-round planner");
  add_common(solve, true);
  CLI::App* obbt = app.add_subcommand("obbt", "run bound-tightening sweeps");
  add_common(obbt, true);
  obbt->add_option("--sweeps", common.sweeps, "number of sweeps (default 1)");
  CLI::App* simq = app.add_subcommand("simulate-quality", "chlorine transport simulation");
  add_common(simq, false);
  simq->add_option("--flows", flows_path, "flow schedule CSV from a prior solve");
  simq->add_flag("--warmup", warmup, "run the 24-step flush and emit initial concentrations");

  try {
    std::vector<const char*> argv;
    argv.push_back("wdnrtr");
    for (const std::string& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return 0;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (build->parsed()) return cmd_build(common);
    if (solve->parsed()) return cmd_solve(common);
    if (obbt->parsed()) return cmd_obbt(common);
    if (simq->parsed()) return cmd_simulate_quality(common, flows_path, warmup);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const SolveError& e) {
    std::cerr << "solver: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace wdn
