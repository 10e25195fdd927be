// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/mutations.hpp"
#include "support/oracle.hpp"
#include "support/random_findings.hpp"
#include "vchain/reachability.hpp"
#include "vchain/reporting.hpp"

using namespace vchain;
using vchain::testing::all_user_actions;
using vchain::testing::by_label;
using vchain::testing::by_labels;
using vchain::testing::load_fsm;

namespace fs = std::filesystem;

namespace {

constexpr int kCorpusSize = 1000;
constexpr unsigned kCorpusSeed = 20240611;

/// Failure detail collected by a criterion; empty means pass.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && first_.empty()) first_ = what;
    if (!ok) ++failures_;
  }
  bool ok() const { return failures_ == 0; }
  std::string detail() const {
    return first_ + (failures_ > 1 ? " (+" + std::to_string(failures_ - 1) + " more)" : "");
  }
  std::string note;

 private:
  std::string first_;
  int failures_ = 0;
};

struct Criterion {
  int number;
  std::string title;
  double limit_seconds;
  std::function<void(Check&)> body;
};

std::string names(const Fsm& fsm, const std::set<StateId>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) out.push_back(fsm.at(id).display_name());
  std::ranges::sort(out);
  std::string s = "{";
  for (std::size_t i = 0; i < out.size(); ++i) s += (i ? ", " : "") + out[i];
  return s + "}";
}

std::set<StateId> with_start(std::set<StateId> ids) {
  ids.insert(kStartStateId);
  return ids;
}

ReachParams params(AssumptionSet a, Semantics s = Semantics::FixedPoint) {
  ReachParams p;
  p.assumptions = std::move(a);
  p.semantics = s;
  return p;
}

std::set<StateId> attached(const Fsm& fsm) {
  std::set<StateId> out;
  for (const auto& e : fsm.edges()) {
    if (e.kind == EdgeKind::Attach) out.insert(e.to);
  }
  return out;
}

std::size_t step_of(const AttackPath& path, const StateId& id) {
  for (std::size_t i = 0; i < path.steps.size(); ++i) {
    if (path.steps[i].state == id) return i;
  }
  return path.steps.size();
}

const std::vector<testing::RandomCase>& corpus() {
  static const auto cases = [] {
    std::mt19937 rng(kCorpusSeed);
    std::vector<testing::RandomCase> out;
    for (int i = 0; i < kCorpusSize; ++i) out.push_back(testing::random_case(rng));
    return out;
  }();
  return cases;
}

void criterion1(Check& c) {
  const auto fsm = load_fsm("toy");
  c.expect(fsm.non_start_count() == 4, "expected 4 states, got " + std::to_string(fsm.non_start_count()));
  const auto r = reach(fsm);
  const auto expected = with_start(by_labels(fsm, {"S1", "S2", "S3"}));
  c.expect(r.visited == expected, "visited " + names(fsm, r.visited));
  c.expect(!r.true_conditions.contains("x_2"), "x_2 became true");
}

void criterion2(Check& c) {
  const auto fsm = load_fsm("testphp");
  c.expect(fsm.non_start_count() == 10, "expected 10 states, got " + std::to_string(fsm.non_start_count()));
  const auto start = attached(fsm);
  c.expect(start == by_labels(fsm, {"S1", "S2", "S3", "S5", "S9"}), "start attaches to " + names(fsm, start));
  const auto all = collect_goals(reach(fsm, params(all_user_actions(fsm))), fsm);
  c.expect(all == by_labels(fsm, {"S4", "S7", "S10"}), "goals with assumptions " + names(fsm, all));
  const auto none = collect_goals(reach(fsm), fsm);
  c.expect(none == by_labels(fsm, {"S4", "S10"}), "goals without assumptions " + names(fsm, none));
}

void criterion3(Check& c) {
  const auto fsm = load_fsm("phpmyadmin");
  c.expect(fsm.non_start_count() == 7, "expected 7 states, got " + std::to_string(fsm.non_start_count()));
  const auto r = reach(fsm);
  const auto goals = collect_goals(r, fsm);
  c.expect(goals == by_labels(fsm, {"S7"}), "goals " + names(fsm, goals));
  if (!goals.contains(by_label(fsm, "S7"))) return;
  const auto path = extract_witness(fsm, r, by_label(fsm, "S7"));
  const auto at = [&](const char* l) { return step_of(path, by_label(fsm, l)); };
  const auto n = path.steps.size();
  c.expect(at("S3") < at("S5") && at("S4") < at("S5"), "S3 and S4 must precede S5");
  c.expect(at("S5") < at("S7") && at("S6") < at("S7"), "S5 and S6 must precede S7");
  c.expect(at("S7") == n - 1, "witness must end at S7");
  const auto replay = check_witness(fsm, path);
  c.expect(!replay, "witness does not replay: " + replay.value_or(""));
  std::string seq;
  for (const auto& s : path.steps) seq += (seq.empty() ? "" : " ") + fsm.at(s.state).display_name();
  c.note = "witness: " + seq;
}

void criterion4(Check& c) {
  for (const char* table : {"testphp", "phpmyadmin"}) {
    const auto fsm = load_fsm(table);
    for (const auto& p : {ReachParams{}, params(all_user_actions(fsm))}) {
      const auto report = diff_isolated_vs_chained(fsm, p);
      c.expect(report.isolated.empty(), std::string(table) + ": isolated " + names(fsm, report.isolated));
      c.expect(!report.chained.empty(), std::string(table) + ": no chained goal");
    }
  }
}

void criterion5(Check& c) {
  const auto& cases = corpus();
  int i = 0;
  for (const auto& rc : cases) {
    const auto fsm = build_fsm(rc.findings, UriTree{});
    const auto fixed = reach(fsm, params(AssumptionSet{rc.assumptions}));
    const auto oracle = testing::brute_force_reach(fsm, rc.assumptions);
    c.expect(fixed.visited == oracle.visited, "case " + std::to_string(i) + ": visited differs from the oracle");
    ++i;
  }
  c.note = std::to_string(cases.size()) + " machines";
}

void criterion6(Check& c) {
  const auto& cases = corpus();
  int strict = 0;
  int i = 0;
  for (const auto& rc : cases) {
    const auto fsm = build_fsm(rc.findings, UriTree{});
    const AssumptionSet a{rc.assumptions};
    const auto fixed = reach(fsm, params(a)).visited;
    const auto dfs = reach(fsm, params(a, Semantics::PaperDfs)).visited;
    c.expect(std::ranges::includes(fixed, dfs), "case " + std::to_string(i) + ": paper-dfs visits extra states");
    if (dfs.size() < fixed.size()) ++strict;
    ++i;
  }
  c.expect(strict > 0, "no case shows strict inclusion");
  c.note = std::to_string(strict) + "/" + std::to_string(cases.size()) + " strict";
}

void criterion7(Check& c) {
  const auto& cases = corpus();
  std::size_t runs = 0;
  int i = 0;
  for (const auto& rc : cases) {
    const auto base = reach(build_fsm(rc.findings, UriTree{}), params(AssumptionSet{rc.assumptions})).visited;
    for (const auto& m : testing::single_mutations(rc)) {
      const auto mutated = reach(build_fsm(m.findings, UriTree{}), params(AssumptionSet{m.assumptions})).visited;
      c.expect(std::ranges::includes(mutated, base), "case " + std::to_string(i) + ": a mutation lost states");
      ++runs;
    }
    ++i;
  }
  c.note = std::to_string(runs) + " mutations";
}

/// Runs the command-line tool in a child process.
int run_tool(const std::vector<std::string>& args) {
  std::string cmd = "\"" + std::string(VCHAIN_CLI) + "\"";
  for (const auto& a : args) cmd += " \"" + a + "\"";
  cmd += " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

const std::regex kDashedPlain(R"(style=dashed\];$)");
const std::regex kRedNode(R"(fillcolor=red)");

std::size_t count_lines(const std::string& text, const std::regex& re) {
  std::size_t n = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) n += std::regex_search(line, re) ? 1 : 0;
  return n;
}

void criterion8(Check& c) {
  const auto root = fs::temp_directory_path() / ("vchain_acceptance_" + std::to_string(std::random_device{}()));
  std::map<std::string, std::string> first;
  for (int round = 0; round < 2; ++round) {
    const auto dir = root / std::to_string(round);
    fs::create_directories(dir);
    for (const std::string table : {"toy", "testphp", "phpmyadmin"}) {
      const auto fsm = (dir / (table + ".fsm.json")).string();
      const auto report = (dir / (table + ".report.json")).string();
      const auto dot = (dir / (table + ".dot")).string();
      c.expect(run_tool({"build", "--findings", testing::fixture_path(table + "_findings.json"), "--crawl",
                         testing::fixture_path(table + "_crawl.txt"), "--out", fsm}) == 0,
               table + ": build failed");
      c.expect(run_tool({"analyze", "--fsm", fsm, "--out", report}) == 0, table + ": analyze failed");
      c.expect(run_tool({"export-dot", "--fsm", fsm, "--out", dot}) == 0, table + ": export-dot failed");
      for (const auto& path : {fsm, report, dot}) {
        if (!fs::exists(path)) continue;
        const auto name = fs::path(path).filename().string();
        const auto bytes = testing::read_text(path);
        if (round == 0) {
          first[name] = bytes;
        } else {
          c.expect(first[name] == bytes, name + " differs between runs");
        }
      }
    }
  }
  const auto dot = first["testphp.dot"];
  const auto dashed = count_lines(dot, kDashedPlain);
  const auto red = count_lines(dot, kRedNode);
  c.expect(dashed == 3, "testphp DOT has " + std::to_string(dashed) + " dashed precondition edges");
  c.expect(red == 3, "testphp DOT has " + std::to_string(red) + " red goal nodes");
  c.note = std::to_string(first.size()) + " files compared";
  fs::remove_all(root);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "toy fidelity", 1.0, criterion1},
      {2, "testphp fidelity", 1.0, criterion2},
      {3, "phpmyadmin fidelity and witness order", 1.0, criterion3},
      {4, "chaining amplification", 1.0, criterion4},
      {5, "oracle equivalence", 60.0, criterion5},
      {6, "paper-dfs soundness", 60.0, criterion6},
      {7, "monotonicity", 120.0, criterion7},
      {8, "determinism", 5.0, criterion8},
  };

  corpus();  // generated once, outside the timed sections
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    check.expect(secs < cr.limit_seconds, "took " + std::to_string(secs) + " s, limit " +
                                              std::to_string(cr.limit_seconds) + " s");
    const bool ok = check.ok();
    failed += ok ? 0 : 1;
    std::ostringstream line;
    line << (ok ? "PASS" : "FAIL") << " criterion " << cr.number << ": " << cr.title;
    line << " [" << static_cast<long>(secs * 1000) << " ms]";
    if (!check.note.empty()) line << " " << check.note;
    if (!ok) line << " :: " << check.detail();
    std::cout << line.str() << "\n";
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
