#include "vchain/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "vchain/detail/text.hpp"
#include "vchain/fsm_builder.hpp"
#include "vchain/ingestion.hpp"
#include "vchain/reachability.hpp"
#include "vchain/reporting.hpp"

namespace vchain {

namespace {

// Input files that cannot be read are user errors, not internal ones.
std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::SchemaViolation, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::SchemaViolation, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::SchemaViolation, "failed writing '" + path + "'");
}

template <class F>
auto with_file(const std::string& path, F&& f) {
  try {
    return f(read_file(path));
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.find(path) != std::string::npos) throw;
    throw Error(e.code(), path + ": " + what);
  }
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

/// Resolves analyst-typed condition text to a user-action condition id.
ConditionId resolve_assumption(const Fsm& fsm, const std::string& text) {
  const auto id = normalize_condition(text).id;
  if (fsm.user_action_conditions().contains(id)) return id;

  std::vector<std::string> near;
  const auto stripped = strip_punctuation(id);
  for (const auto& candidate : fsm.user_action_conditions()) {
    const auto limit = std::max<std::size_t>(3, candidate.size() / 4);
    if (strip_punctuation(candidate) == stripped || detail::edit_distance(candidate, id) <= limit ||
        candidate.find(id) != std::string::npos || id.find(candidate) != std::string::npos) {
      near.push_back(candidate);
    }
  }
  std::string msg = fsm.condition_labels().contains(id)
                        ? "'" + id + "' is not a user-action precondition"
                        : "unknown user-action condition '" + id + "'";
  if (!near.empty()) {
    msg += "; did you mean:";
    for (const auto& n : near) msg += " '" + n + "'";
  }
  throw Error(ErrorCode::InvalidAssumption, msg);
}

AssumptionSet resolve_assumptions(const Fsm& fsm, const std::vector<std::string>& texts) {
  AssumptionSet set;
  for (const auto& t : texts) set.granted_user_actions.insert(resolve_assumption(fsm, t));
  return set;
}

std::string names(const Fsm& fsm, const std::set<StateId>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) out.push_back(fsm.at(id).display_name());
  std::sort(out.begin(), out.end());
  std::string joined;
  for (const auto& n : out) joined += (joined.empty() ? "" : ", ") + n;
  return joined.empty() ? "(none)" : joined;
}

std::string delta(const Fsm& fsm, const std::set<StateId>& before, const std::set<StateId>& after) {
  std::vector<std::string> parts;
  for (const auto& id : after) {
    if (!before.contains(id)) parts.push_back("+" + fsm.at(id).display_name());
  }
  for (const auto& id : before) {
    if (!after.contains(id)) parts.push_back("-" + fsm.at(id).display_name());
  }
  std::sort(parts.begin(), parts.end(), [](const std::string& a, const std::string& b) {
    return std::pair(a.substr(1), a[0]) < std::pair(b.substr(1), b[0]);
  });
  std::string joined;
  for (const auto& p : parts) joined += (joined.empty() ? "" : " ") + p;
  return "{" + joined + "}";
}

Semantics semantics_from(const std::string& text) {
  if (auto s = parse_semantics(text)) return *s;
  throw Error(ErrorCode::SchemaViolation, "unknown semantics '" + text + "'");
}

struct Options {
  std::string findings, crawl, out, fsm, reach, semantics = "fixed-point", site;
  std::vector<std::string> assume, toggle;
};

int cmd_build(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const auto findings = with_file(o.findings, [&](const std::string& text) {
    return ends_with(o.findings, ".tsv") ? parse_findings_tsv(text, o.site, &warnings)
                                         : parse_findings(text, &warnings);
  });
  const auto tree = with_file(o.crawl, [](const std::string& text) { return parse_crawl_list(text); });
  const auto fsm = build_fsm(findings, tree, &warnings);
  std::sort(warnings.begin(), warnings.end());
  warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  write_file(o.out, serialize_fsm(fsm));
  out << "built " << fsm.non_start_count() << " states, " << fsm.structural_edges().size() << " edges, "
      << fsm.goals().size() << " goals -> " << o.out << "\n";
  return kExitOk;
}

Fsm load_fsm(const std::string& path) {
  return with_file(path, [](const std::string& text) { return parse_fsm(text); });
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream&) {
  const auto fsm = load_fsm(o.fsm);
  ReachParams params;
  params.semantics = semantics_from(o.semantics);
  params.assumptions = resolve_assumptions(fsm, o.assume);
  const auto report = analyze(fsm, params);
  if (!o.out.empty()) write_file(o.out, serialize_report(report));

  out << "site: " << (report.site.empty() ? "(unnamed)" : report.site) << "\n";
  out << "semantics: " << to_string(report.semantics) << "\n";
  out << "states: " << report.summary.states << ", edges: " << report.summary.edges << "\n";
  out << "reachable states: " << report.reach.visited.size() - 1 << "/" << report.summary.states << "\n";
  out << goals_line(report) << "\n";
  if (!report.reachable_goals.empty()) out << "reached: " << names(fsm, report.reachable_goals) << "\n";
  for (const auto& u : report.unreachable_goals) {
    out << "unreachable " << fsm.at(u.state).display_name() << ", missing:";
    for (const auto& c : u.missing) out << " '" << c << "'";
    out << "\n";
    out << "  blocked by:";
    for (const auto& c : u.blocking) out << " '" << c << "'";
    out << "\n";
  }
  for (const auto& w : report.witnesses) {
    out << "path to " << fsm.at(w.goal).display_name() << ":";
    for (const auto& step : w.steps) out << " " << fsm.at(step.state).display_name();
    out << "\n";
  }
  return kExitOk;
}

int cmd_whatif(const Options& o, std::ostream& out, std::ostream&) {
  const auto fsm = load_fsm(o.fsm);
  ReachParams base;
  base.semantics = semantics_from(o.semantics);
  base.assumptions = resolve_assumptions(fsm, o.assume);
  ReachParams toggled = base;
  for (const auto& id : resolve_assumptions(fsm, o.toggle).granted_user_actions) {
    auto& set = toggled.assumptions.granted_user_actions;
    if (!set.erase(id)) set.insert(id);
  }
  const auto before = reach(fsm, base);
  const auto after = reach(fsm, toggled);
  const auto goals_before = collect_goals(before, fsm);
  const auto goals_after = collect_goals(after, fsm);
  std::set<StateId> states_before(before.visited), states_after(after.visited);
  states_before.erase(kStartStateId);
  states_after.erase(kStartStateId);

  out << "states: " << delta(fsm, states_before, states_after) << "\n";
  out << "goals: " << delta(fsm, goals_before, goals_after) << "\n";
  out << "goals reached: " << goals_before.size() << "/" << fsm.goals().size() << " -> " << goals_after.size()
      << "/" << fsm.goals().size() << "\n";
  return kExitOk;
}

int cmd_export_dot(const Options& o, std::ostream& out, std::ostream&) {
  const auto fsm = load_fsm(o.fsm);
  std::optional<ReachResult> result;
  if (!o.reach.empty()) {
    auto report = with_file(o.reach, [](const std::string& text) { return parse_report(text); });
    for (const auto& id : report.reach.visited) {
      if (!fsm.find(id)) {
        throw Error(ErrorCode::ResultFsmMismatch, o.reach + ": state " + id.value + " is not in " + o.fsm);
      }
    }
    result = std::move(report.reach);
  }
  const auto dot = to_dot(fsm, result ? &*result : nullptr);
  if (o.out.empty()) {
    out << dot;
  } else {
    write_file(o.out, dot);
  }
  return kExitOk;
}

int cmd_diff_isolated(const Options& o, std::ostream& out, std::ostream&) {
  const auto fsm = load_fsm(o.fsm);
  ReachParams params;
  params.semantics = semantics_from(o.semantics);
  params.assumptions = resolve_assumptions(fsm, o.assume);
  const auto report = diff_isolated_vs_chained(fsm, params);

  std::size_t width = 4;
  for (const auto& g : fsm.goals()) width = std::max(width, fsm.at(g).display_name().size());
  out << std::left << std::setw(static_cast<int>(width) + 2) << "goal" << std::setw(10) << "isolated"
      << std::setw(9) << "chained"
      << "amplified\n";
  for (const auto& g : fsm.goals()) {
    const auto yes = [](bool b) { return b ? "yes" : "no"; };
    out << std::left << std::setw(static_cast<int>(width) + 2) << fsm.at(g).display_name() << std::setw(10)
        << yes(report.isolated.contains(g)) << std::setw(9) << yes(report.chained.contains(g))
        << yes(report.difference.contains(g)) << "\n";
  }
  out << "isolated: " << report.isolated.size() << ", chained: " << report.chained.size()
      << ", amplified: " << report.difference.size() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attack-graph engine for chained web vulnerabilities", "vchain"};
  app.require_subcommand(1);
  Options o;

  auto* build = app.add_subcommand("build", "Build the state machine from findings and a crawl list");
  build->add_option("--findings", o.findings, "Findings file (.json, or .tsv for the tabular form)")->required();
  build->add_option("--crawl", o.crawl, "Crawl list, one URI per line")->required();
  build->add_option("--out", o.out, "Output state machine JSON")->required();
  build->add_option("--site", o.site, "Site label for tabular findings");

  const auto add_assume = [&](CLI::App* cmd) {
    cmd->add_option("--assume", o.assume, "Grant a user-action condition (repeatable)");
  };
  const auto add_semantics = [&](CLI::App* cmd) {
    cmd->add_option("--semantics", o.semantics, "fixed-point (default) or paper-dfs")
        ->check(CLI::IsMember({"fixed-point", "paper-dfs"}));
  };

  auto* analyze_cmd = app.add_subcommand("analyze", "Compute reachable goals and attack paths");
  analyze_cmd->add_option("--fsm", o.fsm, "State machine JSON")->required();
  add_assume(analyze_cmd);
  add_semantics(analyze_cmd);
  analyze_cmd->add_option("--out", o.out, "Output report JSON");

  auto* whatif = app.add_subcommand("whatif", "Goal-set delta when toggling assumptions");
  whatif->add_option("--fsm", o.fsm, "State machine JSON")->required();
  add_assume(whatif);
  add_semantics(whatif);
  whatif->add_option("--toggle", o.toggle, "Condition to flip relative to --assume (repeatable)")->required();

  auto* dot = app.add_subcommand("export-dot", "Write the state machine as Graphviz DOT");
  dot->add_option("--fsm", o.fsm, "State machine JSON")->required();
  dot->add_option("--reach", o.reach, "Report JSON whose reachable states are drawn bold");
  dot->add_option("--out", o.out, "Output DOT file (default: stdout)");

  auto* diff = app.add_subcommand("diff-isolated", "Goals reachable only by chaining");
  diff->add_option("--fsm", o.fsm, "State machine JSON")->required();
  add_assume(diff);
  add_semantics(diff);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (build->parsed()) return cmd_build(o, out, err);
    if (analyze_cmd->parsed()) return cmd_analyze(o, out, err);
    if (whatif->parsed()) return cmd_whatif(o, out, err);
    if (dot->parsed()) return cmd_export_dot(o, out, err);
    if (diff->parsed()) return cmd_diff_isolated(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace vchain
