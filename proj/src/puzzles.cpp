#include "pgmforge/puzzles.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pgmforge/errors.hpp"

namespace pgm {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Rules shared by the factor compiler and the brute-force oracle. Cell
// numbers index puzzle_cells(spec).

enum class RuleKind { AllDifferent, Cage, Count, Parity };

struct Rule {
  RuleKind kind = RuleKind::AllDifferent;
  std::vector<std::size_t> cells;
  int target = 0;
  CageOp op = CageOp::Sum;
  bool distinct = false;
};

int cardinality(const PuzzleSpec& spec) {
  switch (spec.kind) {
    case PuzzleKind::Sudoku4: return 4;
    case PuzzleKind::Sudoku9:
    case PuzzleKind::KillerSudoku:
    case PuzzleKind::Kakuro: return 9;
    case PuzzleKind::Calcudoku: return spec.rows;
    case PuzzleKind::FillAPix:
    case PuzzleKind::Hamming74: return 2;
    case PuzzleKind::GraphColouring: return spec.colours;
  }
  return 0;
}

bool is_latin(PuzzleKind kind) {
  return kind == PuzzleKind::Sudoku4 || kind == PuzzleKind::Sudoku9 ||
         kind == PuzzleKind::KillerSudoku || kind == PuzzleKind::Calcudoku;
}

bool has_boxes(PuzzleKind kind) { return is_latin(kind) && kind != PuzzleKind::Calcudoku; }

/// Whether the clue list holds cell values (as opposed to Fill-a-pix counts).
bool clues_are_givens(PuzzleKind kind) {
  return is_latin(kind) || kind == PuzzleKind::Kakuro;
}

bool cage_holds(CageOp op, int target, const std::vector<int>& v) {
  switch (op) {
    case CageOp::Sum:
    case CageOp::Add: {
      int s = 0;
      for (int x : v) s += x;
      return s == target;
    }
    case CageOp::Mul: {
      long long p = 1;
      for (int x : v) p *= x;
      return p == target;
    }
    case CageOp::Sub:
      return v.size() == 2 && std::abs(v[0] - v[1]) == target;
    case CageOp::Div: {
      if (v.size() != 2) return false;
      const int hi = std::max(v[0], v[1]);
      const int lo = std::min(v[0], v[1]);
      return lo != 0 && hi % lo == 0 && hi / lo == target;
    }
    case CageOp::None:
      return std::ranges::all_of(v, [&](int x) { return x == target; });
  }
  return false;
}

std::vector<std::vector<std::size_t>> maximal_cliques(std::size_t n,
                                                      const std::vector<std::set<std::size_t>>& adj) {
  std::vector<std::vector<std::size_t>> out;
  auto expand = [&](auto&& self, std::vector<std::size_t>& r, std::set<std::size_t> p,
                    std::set<std::size_t> x) -> void {
    if (p.empty() && x.empty()) {
      auto clique = r;
      std::ranges::sort(clique);
      out.push_back(std::move(clique));
      return;
    }
    std::size_t pivot = p.empty() ? *x.begin() : *p.begin();
    std::size_t best = 0;
    for (const auto* s : {&p, &x})
      for (auto u : *s) {
        std::size_t hits = 0;
        for (auto w : p) hits += adj[u].count(w);
        if (hits > best) {
          best = hits;
          pivot = u;
        }
      }
    std::vector<std::size_t> candidates;
    for (auto v : p)
      if (!adj[pivot].contains(v)) candidates.push_back(v);
    for (auto v : candidates) {
      std::set<std::size_t> p2, x2;
      for (auto w : p)
        if (adj[v].contains(w)) p2.insert(w);
      for (auto w : x)
        if (adj[v].contains(w)) x2.insert(w);
      r.push_back(v);
      self(self, r, std::move(p2), std::move(x2));
      r.pop_back();
      p.erase(v);
      x.insert(v);
    }
  };
  std::set<std::size_t> all;
  for (std::size_t i = 0; i < n; ++i) all.insert(i);
  std::vector<std::size_t> r;
  expand(expand, r, all, {});
  std::ranges::sort(out);
  return out;
}

std::map<Cell, std::size_t> cell_index(const std::vector<Cell>& cells) {
  std::map<Cell, std::size_t> idx;
  for (std::size_t i = 0; i < cells.size(); ++i) idx.emplace(cells[i], i);
  return idx;
}

std::vector<Rule> rules_of(const PuzzleSpec& spec) {
  const auto cells = puzzle_cells(spec);
  const auto idx = cell_index(cells);
  std::vector<Rule> rules;
  auto at = [&](int r, int c) { return idx.at(Cell{r, c}); };

  if (is_latin(spec.kind)) {
    const int n = spec.rows;
    for (int r = 0; r < n; ++r) {
      Rule rule;
      for (int c = 0; c < n; ++c) rule.cells.push_back(at(r, c));
      rules.push_back(std::move(rule));
    }
    for (int c = 0; c < n; ++c) {
      Rule rule;
      for (int r = 0; r < n; ++r) rule.cells.push_back(at(r, c));
      rules.push_back(std::move(rule));
    }
    if (has_boxes(spec.kind)) {
      const int b = n == 4 ? 2 : 3;
      for (int br = 0; br < n; br += b)
        for (int bc = 0; bc < n; bc += b) {
          Rule rule;
          for (int r = br; r < br + b; ++r)
            for (int c = bc; c < bc + b; ++c) rule.cells.push_back(at(r, c));
          rules.push_back(std::move(rule));
        }
    }
  }
  switch (spec.kind) {
    case PuzzleKind::KillerSudoku:
    case PuzzleKind::Calcudoku:
    case PuzzleKind::Kakuro:
      for (const auto& cage : spec.cages) {
        Rule rule{RuleKind::Cage, {}, cage.target, cage.op, spec.kind != PuzzleKind::Calcudoku};
        for (const auto& cell : cage.cells) rule.cells.push_back(idx.at(cell));
        rules.push_back(std::move(rule));
      }
      break;
    case PuzzleKind::FillAPix:
      for (const auto& clue : spec.clues) {
        Rule rule{RuleKind::Count, {}, clue.value, CageOp::Sum, false};
        for (int r = clue.cell.row - 1; r <= clue.cell.row + 1; ++r)
          for (int c = clue.cell.col - 1; c <= clue.cell.col + 1; ++c)
            if (r >= 0 && r < spec.rows && c >= 0 && c < spec.cols) rule.cells.push_back(at(r, c));
        rules.push_back(std::move(rule));
      }
      break;
    case PuzzleKind::GraphColouring: {
      std::vector<std::set<std::size_t>> adj(spec.nodes.size());
      for (const auto& [a, b] : spec.edges) {
        adj[a].insert(b);
        adj[b].insert(a);
      }
      for (auto& clique : maximal_cliques(spec.nodes.size(), adj))
        rules.push_back(Rule{RuleKind::AllDifferent, std::move(clique), 0, CageOp::Sum, true});
      break;
    }
    case PuzzleKind::Hamming74:
      rules.push_back(Rule{RuleKind::Parity, {4, 0, 1, 2}});
      rules.push_back(Rule{RuleKind::Parity, {5, 1, 2, 3}});
      rules.push_back(Rule{RuleKind::Parity, {6, 0, 2, 3}});
      break;
    default:
      break;
  }
  return rules;
}

/// Whether complete values satisfy a rule.
bool rule_holds(const Rule& rule, const std::vector<int>& v) {
  switch (rule.kind) {
    case RuleKind::AllDifferent: {
      std::set<int> seen(v.begin(), v.end());
      return seen.size() == v.size();
    }
    case RuleKind::Cage: {
      if (rule.distinct && std::set<int>(v.begin(), v.end()).size() != v.size()) return false;
      return cage_holds(rule.op, rule.target, v);
    }
    case RuleKind::Count:
      return std::ranges::count(v, 1) == rule.target;
    case RuleKind::Parity: {
      int x = 0;
      for (int b : v) x ^= b;
      return x == 0;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Validation

[[noreturn]] void malformed(const std::string& what) { fail(ErrorCode::MalformedSpec, what); }

bool in_grid(const PuzzleSpec& s, const Cell& c) {
  return c.row >= 0 && c.row < s.rows && c.col >= 0 && c.col < s.cols;
}

std::string cell_text(const Cell& c) {
  return "(" + std::to_string(c.row) + ", " + std::to_string(c.col) + ")";
}

void validate(PuzzleSpec& spec) {
  std::ranges::sort(spec.clues, {}, [](const Clue& c) { return c.cell; });
  for (std::size_t i = 1; i < spec.clues.size(); ++i)
    if (spec.clues[i].cell == spec.clues[i - 1].cell)
      malformed("two clues at cell " + cell_text(spec.clues[i].cell));

  switch (spec.kind) {
    case PuzzleKind::Sudoku4:
    case PuzzleKind::Sudoku9:
    case PuzzleKind::KillerSudoku: {
      const int n = spec.kind == PuzzleKind::Sudoku4 ? 4 : 9;
      if (spec.rows != n || spec.cols != n) malformed("grid must be " + std::to_string(n) + "x" + std::to_string(n));
      break;
    }
    case PuzzleKind::Calcudoku:
      if (spec.rows != spec.cols || spec.rows < 1 || spec.rows > 9) malformed("Calcudoku grid must be square, 1..9");
      break;
    case PuzzleKind::Kakuro:
    case PuzzleKind::FillAPix:
      if (spec.rows < 1 || spec.cols < 1 || spec.rows > 64 || spec.cols > 64) malformed("grid size out of range");
      break;
    case PuzzleKind::GraphColouring:
      if (spec.colours < 1 || spec.colours > 64) malformed("colour count must lie in 1..64");
      for (const auto& [a, b] : spec.edges)
        if (a >= b || b >= spec.nodes.size()) malformed("edge endpoints out of range");
      if (spec.nodes.empty()) malformed("graph has no nodes");
      return;
    case PuzzleKind::Hamming74:
      if (spec.received.size() != 7 ||
          !std::ranges::all_of(spec.received, [](char ch) { return ch == '0' || ch == '1'; }))
        malformed("received word must be 7 bits");
      if (!(spec.flip_prob > 0.0 && spec.flip_prob < 0.5)) malformed("flip probability must lie in (0, 0.5)");
      return;
  }

  for (const auto& clue : spec.clues)
    if (!in_grid(spec, clue.cell)) malformed("clue outside the grid at " + cell_text(clue.cell));

  const bool cages_allowed = spec.kind == PuzzleKind::KillerSudoku || spec.kind == PuzzleKind::Calcudoku ||
                             spec.kind == PuzzleKind::Kakuro;
  if (!cages_allowed && !spec.cages.empty()) malformed("this puzzle kind takes no cages");
  std::set<Cell> covered;
  for (const auto& cage : spec.cages) {
    if (cage.cells.empty()) malformed("empty cage");
    std::set<Cell> own;
    for (const auto& cell : cage.cells) {
      if (!in_grid(spec, cell)) malformed("cage cell outside the grid at " + cell_text(cell));
      if (!own.insert(cell).second) malformed("cage repeats cell " + cell_text(cell));
      if (spec.kind != PuzzleKind::Kakuro && !covered.insert(cell).second)
        malformed("cages overlap at " + cell_text(cell));
    }
    if ((cage.op == CageOp::Sub || cage.op == CageOp::Div) && cage.cells.size() != 2)
      malformed("subtraction and division cages need exactly two cells");
    if (cage.op == CageOp::None && cage.cells.size() != 1) malformed("a cage without operator holds one cell");
    if (spec.kind != PuzzleKind::Calcudoku && cage.op != CageOp::Sum && cage.op != CageOp::Add)
      malformed("only sum cages are allowed here");
    if (spec.kind == PuzzleKind::Kakuro && cage.cells.size() > 9) malformed("Kakuro run longer than 9");
    if (cage.target < 0) malformed("negative cage target");
  }
  if (spec.kind == PuzzleKind::Calcudoku && covered.size() != static_cast<std::size_t>(spec.rows * spec.cols))
    malformed("Calcudoku cages must cover the grid exactly");
  if (spec.kind == PuzzleKind::Kakuro && spec.cages.empty()) malformed("Kakuro needs at least one run");

  const int lo = value_offset(spec.kind);
  const int hi = lo + cardinality(spec) - 1;
  if (clues_are_givens(spec.kind)) {
    std::set<Cell> run_cells;
    for (const auto& cage : spec.cages) run_cells.insert(cage.cells.begin(), cage.cells.end());
    for (const auto& clue : spec.clues) {
      if (clue.value < lo || clue.value > hi)
        fail(ErrorCode::InconsistentClue, "clue " + std::to_string(clue.value) + " outside " +
                                              std::to_string(lo) + ".." + std::to_string(hi));
      if (spec.kind == PuzzleKind::Kakuro && !run_cells.contains(clue.cell))
        malformed("Kakuro clue outside every run at " + cell_text(clue.cell));
    }
  } else {
    for (const auto& clue : spec.clues)
      if (clue.value < 0 || clue.value > 9)
        fail(ErrorCode::InconsistentClue, "Fill-a-pix count must lie in 0..9");
  }
}

// ---------------------------------------------------------------------------
// Parsing

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

PuzzleSpec parse_sudoku(PuzzleKind kind, std::string_view text) {
  const int n = kind == PuzzleKind::Sudoku4 ? 4 : 9;
  const auto line = trim(text);
  if (line.size() != static_cast<std::size_t>(n * n))
    fail(ErrorCode::ParseError, "line 1: expected " + std::to_string(n * n) + " characters, got " +
                                    std::to_string(line.size()));
  PuzzleSpec spec;
  spec.kind = kind;
  spec.rows = spec.cols = n;
  for (int i = 0; i < n * n; ++i) {
    const char ch = line[static_cast<std::size_t>(i)];
    if (ch == '.' || ch == '0') continue;
    if (ch < '1' || ch > '9')
      fail(ErrorCode::ParseError, "line 1, column " + std::to_string(i + 1) + ": unexpected '" +
                                      std::string(1, ch) + "'");
    spec.clues.push_back({{i / n, i % n}, ch - '0'});
  }
  return spec;
}

CageOp parse_op(const std::string& raw) {
  std::string s;
  for (char ch : raw) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  if (s == "SUM") return CageOp::Sum;
  if (s == "ADD" || s == "+") return CageOp::Add;
  if (s == "SUB" || s == "-") return CageOp::Sub;
  if (s == "MUL" || s == "*" || s == "X") return CageOp::Mul;
  if (s == "DIV" || s == "/") return CageOp::Div;
  if (s == "NONE" || s == "=" || s.empty()) return CageOp::None;
  malformed("unknown cage operator '" + raw + "'");
}

Cell parse_cell(const json& j) {
  if (!j.is_array() || j.size() < 2) malformed("cell must be [row, col]");
  return {j[0].get<int>(), j[1].get<int>()};
}

PuzzleSpec parse_grid_json(PuzzleKind kind, std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, e.what());
  }
  try {
    PuzzleSpec spec;
    spec.kind = kind;
    if (doc.contains("kind") && parse_kind(doc["kind"].get<std::string>()) != kind)
      malformed("document kind '" + doc["kind"].get<std::string>() + "' does not match");
    spec.rows = doc.at("rows").get<int>();
    spec.cols = doc.at("cols").get<int>();
    for (const auto& c : doc.value("cages", json::array())) {
      Cage cage;
      for (const auto& cell : c.at("cells")) cage.cells.push_back(parse_cell(cell));
      cage.target = c.value("target", 0);
      cage.op = parse_op(c.value("op", std::string(kind == PuzzleKind::Calcudoku ? "NONE" : "SUM")));
      spec.cages.push_back(std::move(cage));
    }
    for (const auto& c : doc.value("clues", json::array())) {
      if (!c.is_array() || c.size() != 3) malformed("clue must be [row, col, value]");
      spec.clues.push_back({{c[0].get<int>(), c[1].get<int>()}, c[2].get<int>()});
    }
    return spec;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, e.what());
  }
}

PuzzleSpec parse_graph(std::string_view text, int colours) {
  PuzzleSpec spec;
  spec.kind = PuzzleKind::GraphColouring;
  spec.colours = colours;
  std::map<std::string, std::size_t> index;
  auto node = [&](const std::string& name) {
    const auto [it, inserted] = index.emplace(name, spec.nodes.size());
    if (inserted) spec.nodes.push_back(name);
    return it->second;
  };
  std::set<std::pair<std::size_t, std::size_t>> edges;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::vector<std::string> tokens;
    for (std::string w; words >> w;) tokens.push_back(w);
    if (tokens.empty()) continue;
    if (tokens[0] == "colours" || tokens[0] == "colors") {
      if (tokens.size() != 2) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 'colours K'");
      try {
        spec.colours = std::stoi(tokens[1]);
      } catch (const std::exception&) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad colour count");
      }
      continue;
    }
    if (tokens.size() == 1) {
      node(tokens[0]);
      continue;
    }
    if (tokens.size() != 2)
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 'u v'");
    const auto a = node(tokens[0]);
    const auto b = node(tokens[1]);
    if (a == b) malformed("self-loop on node '" + tokens[0] + "'");
    edges.emplace(std::min(a, b), std::max(a, b));
  }
  spec.edges.assign(edges.begin(), edges.end());
  return spec;
}

PuzzleSpec parse_hamming(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    PuzzleSpec spec;
    spec.kind = PuzzleKind::Hamming74;
    spec.received = doc.at("received").get<std::string>();
    spec.flip_prob = doc.at("flip_prob").get<double>();
    return spec;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, e.what());
  }
}

// ---------------------------------------------------------------------------
// Factor compilation

/// Satisfying tuples of `rule` over its unfixed cells. Cells are visited in
/// ascending variable order with ascending values, so rows come out sorted.
SparseFactor rule_factor(const Rule& rule, const PuzzleModel& model, int card,
                         const std::map<std::size_t, int>& given) {
  std::vector<std::size_t> free;
  std::vector<int> fixed_values;
  for (auto c : rule.cells) {
    if (auto it = given.find(c); it != given.end())
      fixed_values.push_back(it->second);
    else
      free.push_back(c);
  }
  std::ranges::sort(free, [&](std::size_t a, std::size_t b) { return model.cell_vars[a] < model.cell_vars[b]; });
  const bool distinct = rule.kind == RuleKind::AllDifferent || rule.distinct;
  const bool additive = rule.kind == RuleKind::Cage && (rule.op == CageOp::Sum || rule.op == CageOp::Add);
  const int offset = model.offset;

  std::vector<VarId> scope;
  for (auto c : free) scope.push_back(model.cell_vars[c]);
  std::vector<Domain> domains(free.size(), Domain::range(static_cast<std::size_t>(card)));
  std::vector<Value> keys;
  std::vector<int> values = fixed_values;
  std::vector<Value> row(free.size());
  int partial = 0;
  for (int v : fixed_values) partial += v;

  auto go = [&](auto&& self, std::size_t k) -> void {
    if (k == free.size()) {
      if (rule_holds(rule, values)) keys.insert(keys.end(), row.begin(), row.end());
      return;
    }
    for (int idx = 0; idx < card; ++idx) {
      const int v = offset + idx;
      if (distinct && std::ranges::find(values, v) != values.end()) continue;
      if (additive && partial + v > rule.target) break;
      if (rule.kind == RuleKind::Count && partial + v > rule.target) break;
      row[k] = static_cast<Value>(idx);
      values.push_back(v);
      partial += v;
      self(self, k + 1);
      partial -= v;
      values.pop_back();
    }
  };
  go(go, 0);
  const std::size_t rows = free.empty() ? (keys.empty() && rule_holds(rule, values) ? 1 : 0)
                                        : keys.size() / free.size();
  return SparseFactor::from_parts(std::move(scope), std::move(domains), std::move(keys),
                                  std::vector<double>(rows, 1.0), true);
}

std::vector<SparseFactor> hamming_factors(const PuzzleSpec& spec, VariableRegistry& registry,
                                          std::vector<VarId>& bits, std::vector<VarId>& recv) {
  for (int i = 1; i <= 7; ++i) bits.push_back(registry.add("B" + std::to_string(i), {"0", "1"}));
  for (int i = 1; i <= 7; ++i) recv.push_back(registry.add("R" + std::to_string(i), {"0", "1"}));
  const std::array<std::array<int, 4>, 3> parity{{{4, 0, 1, 2}, {5, 1, 2, 3}, {6, 0, 2, 3}}};
  std::vector<SparseFactor> factors;
  const auto bin = Domain::range(2);
  for (const auto& p : parity) {
    std::vector<Entry> entries;
    for (int m = 0; m < 16; ++m) {
      std::vector<Value> a(4);
      for (int k = 0; k < 4; ++k) a[k] = static_cast<Value>((m >> (3 - k)) & 1);
      if ((a[0] ^ a[1] ^ a[2] ^ a[3]) == 0) entries.push_back({a, 1.0});
    }
    factors.push_back(make_factor({bits[p[0]], bits[p[1]], bits[p[2]], bits[p[3]]}, {bin, bin, bin, bin},
                                  std::move(entries)));
  }
  const double q = spec.flip_prob;
  for (int i = 0; i < 7; ++i) {
    factors.push_back(make_factor({recv[i], bits[i]}, {bin, bin},
                                  {{{0, 0}, 1.0 - q}, {{0, 1}, q}, {{1, 0}, q}, {{1, 1}, 1.0 - q}}));
  }
  return factors;
}

// ---------------------------------------------------------------------------
// Brute force

using Mask = std::uint64_t;

class Backtracker {
 public:
  Backtracker(const PuzzleSpec& spec, std::size_t cap, std::optional<Clock::time_point> deadline)
      : rules_(rules_of(spec)), card_(cardinality(spec)), offset_(value_offset(spec.kind)),
        cap_(cap), deadline_(deadline) {
    const auto cells = puzzle_cells(spec);
    n_ = cells.size();
    touching_.resize(n_);
    for (std::size_t r = 0; r < rules_.size(); ++r)
      for (auto c : rules_[r].cells) touching_[c].push_back(r);
    full_ = card_ >= 64 ? ~Mask{0} : (Mask{1} << card_) - 1;
    dom_.assign(n_, full_);
    val_.assign(n_, -1);
    if (clues_are_givens(spec.kind)) {
      const auto idx = cell_index(cells);
      for (const auto& clue : spec.clues) givens_.emplace_back(idx.at(clue.cell), clue.value - offset_);
    }
  }

  BruteForceResult run() {
    for (const auto& [cell, v] : givens_) {
      if (!(dom_[cell] >> v & 1)) return std::move(out_);
      assign(cell, v);
      if (!propagate(cell)) return std::move(out_);
    }
    search();
    return std::move(out_);
  }

 private:
  void assign(std::size_t cell, int v) {
    val_[cell] = v;
    dom_[cell] = Mask{1} << v;
  }

  int value(std::size_t cell) const { return offset_ + val_[cell]; }

  bool feasible(const Rule& rule) const {
    std::vector<int> known;
    std::vector<std::size_t> open;
    for (auto c : rule.cells) (val_[c] >= 0 ? known.push_back(value(c)) : open.push_back(c));
    const bool distinct = rule.kind == RuleKind::AllDifferent || rule.distinct;
    if (distinct && std::set<int>(known.begin(), known.end()).size() != known.size()) return false;
    switch (rule.kind) {
      case RuleKind::AllDifferent:
        return true;
      case RuleKind::Count: {
        int lo = 0, hi = 0;
        for (int v : known) lo += v, hi += v;
        for (auto c : open) {
          if (dom_[c] == 0b10) ++lo;
          if (dom_[c] & 0b10) ++hi;
        }
        return lo <= rule.target && rule.target <= hi;
      }
      case RuleKind::Parity: {
        if (!open.empty()) return true;
        int x = 0;
        for (int v : known) x ^= v;
        return x == 0;
      }
      case RuleKind::Cage:
        break;
    }
    switch (rule.op) {
      case CageOp::Sum:
      case CageOp::Add: {
        int lo = 0, hi = 0;
        for (int v : known) lo += v, hi += v;
        for (auto c : open) {
          lo += offset_ + std::countr_zero(dom_[c]);
          hi += offset_ + 63 - std::countl_zero(dom_[c]);
        }
        return lo <= rule.target && rule.target <= hi;
      }
      case CageOp::Mul: {
        long long p = 1;
        for (int v : known) p *= v;
        if (open.empty()) return p == rule.target;
        return p != 0 && rule.target % p == 0;
      }
      case CageOp::Sub:
      case CageOp::Div: {
        if (open.empty()) return cage_holds(rule.op, rule.target, known);
        if (known.empty()) return true;
        for (int e = 0; e < card_; ++e)
          if ((dom_[open[0]] >> e & 1) && cage_holds(rule.op, rule.target, {known[0], offset_ + e}))
            return true;
        return false;
      }
      case CageOp::None:
        return std::ranges::all_of(known, [&](int v) { return v == rule.target; });
    }
    return false;
  }

  bool propagate(std::size_t cell) {
    for (auto r : touching_[cell]) {
      const auto& rule = rules_[r];
      if (!feasible(rule)) return false;
      for (auto u : rule.cells) {
        if (val_[u] >= 0) continue;
        Mask keep = 0;
        for (int d = 0; d < card_; ++d) {
          if (!(dom_[u] >> d & 1)) continue;
          val_[u] = d;
          if (feasible(rule)) keep |= Mask{1} << d;
        }
        val_[u] = -1;
        dom_[u] = keep;
        if (keep == 0) return false;
      }
    }
    return true;
  }

  /// Returns false once the search should stop.
  bool search() {
    if (deadline_ && (++nodes_ & 0x3ff) == 0 && Clock::now() > *deadline_)
      fail(ErrorCode::Timeout, "brute-force search exceeded its deadline");
    std::optional<std::size_t> pick;
    for (std::size_t c = 0; c < n_; ++c) {
      if (val_[c] >= 0) continue;
      if (!pick || std::popcount(dom_[c]) < std::popcount(dom_[*pick])) pick = c;
    }
    if (!pick) {
      for (const auto& rule : rules_) {
        std::vector<int> v;
        for (auto c : rule.cells) v.push_back(value(c));
        if (!rule_holds(rule, v)) return true;
      }
      if (out_.solutions.size() == cap_) {
        out_.truncated = true;
        return false;
      }
      std::vector<int> sol(n_);
      for (std::size_t c = 0; c < n_; ++c) sol[c] = value(c);
      out_.solutions.push_back(std::move(sol));
      return true;
    }
    const auto cell = *pick;
    const Mask options = dom_[cell];
    for (int d = 0; d < card_; ++d) {
      if (!(options >> d & 1)) continue;
      const auto saved = dom_;
      assign(cell, d);
      const bool ok = propagate(cell);
      const bool more = !ok || search();
      dom_ = saved;
      val_[cell] = -1;
      if (!more) return false;
    }
    return true;
  }

  std::vector<Rule> rules_;
  std::vector<std::vector<std::size_t>> touching_;
  int card_;
  int offset_;
  std::size_t cap_;
  std::optional<Clock::time_point> deadline_;
  std::size_t n_ = 0;
  Mask full_ = 0;
  std::vector<Mask> dom_;
  std::vector<int> val_;
  std::vector<std::pair<std::size_t, int>> givens_;
  std::size_t nodes_ = 0;
  BruteForceResult out_;
};

int bit_of(const std::string& s, int i) { return s[static_cast<std::size_t>(i)] == '1' ? 1 : 0; }

void fill_from_p_one(HammingDecode& d) {
  d.codeword.clear();
  for (int i = 0; i < 7; ++i) {
    const bool one = d.p_one[i] > 0.5;
    d.codeword.push_back(one ? '1' : '0');
    d.confidence[i] = one ? d.p_one[i] : 1.0 - d.p_one[i];
  }
  d.message = d.codeword.substr(0, 4);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API

std::string_view to_string(PuzzleKind kind) {
  switch (kind) {
    case PuzzleKind::Sudoku4: return "sudoku4";
    case PuzzleKind::Sudoku9: return "sudoku9";
    case PuzzleKind::KillerSudoku: return "killer";
    case PuzzleKind::Calcudoku: return "calcudoku";
    case PuzzleKind::Kakuro: return "kakuro";
    case PuzzleKind::FillAPix: return "fillapix";
    case PuzzleKind::GraphColouring: return "graph";
    case PuzzleKind::Hamming74: return "hamming";
  }
  return "?";
}

PuzzleKind parse_kind(std::string_view text) {
  std::string s;
  for (char ch : text)
    if (ch != '-' && ch != '_' && ch != ' ') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (s == "sudoku4") return PuzzleKind::Sudoku4;
  if (s == "sudoku9" || s == "sudoku") return PuzzleKind::Sudoku9;
  if (s == "killer" || s == "killersudoku") return PuzzleKind::KillerSudoku;
  if (s == "calcudoku" || s == "kenken") return PuzzleKind::Calcudoku;
  if (s == "kakuro") return PuzzleKind::Kakuro;
  if (s == "fillapix") return PuzzleKind::FillAPix;
  if (s == "graph" || s == "graphcolouring" || s == "graphcoloring" || s == "colouring" || s == "coloring")
    return PuzzleKind::GraphColouring;
  if (s == "hamming" || s == "hamming74") return PuzzleKind::Hamming74;
  fail(ErrorCode::MalformedSpec, "unknown puzzle kind '" + std::string(text) + "'");
}

std::string_view to_string(CageOp op) {
  switch (op) {
    case CageOp::Sum: return "SUM";
    case CageOp::Add: return "ADD";
    case CageOp::Sub: return "SUB";
    case CageOp::Mul: return "MUL";
    case CageOp::Div: return "DIV";
    case CageOp::None: return "NONE";
  }
  return "?";
}

PuzzleSpec parse(PuzzleKind kind, std::string_view text, int colours) {
  PuzzleSpec spec;
  switch (kind) {
    case PuzzleKind::Sudoku4:
    case PuzzleKind::Sudoku9:
      spec = parse_sudoku(kind, text);
      break;
    case PuzzleKind::KillerSudoku:
    case PuzzleKind::Calcudoku:
    case PuzzleKind::Kakuro:
    case PuzzleKind::FillAPix:
      spec = parse_grid_json(kind, text);
      break;
    case PuzzleKind::GraphColouring:
      spec = parse_graph(text, colours);
      break;
    case PuzzleKind::Hamming74:
      spec = parse_hamming(text);
      break;
  }
  validate(spec);
  return spec;
}

std::string serialize(const PuzzleSpec& spec) {
  switch (spec.kind) {
    case PuzzleKind::Sudoku4:
    case PuzzleKind::Sudoku9: {
      std::string line(static_cast<std::size_t>(spec.rows * spec.cols), '.');
      for (const auto& c : spec.clues)
        line[static_cast<std::size_t>(c.cell.row * spec.cols + c.cell.col)] = static_cast<char>('0' + c.value);
      return line;
    }
    case PuzzleKind::GraphColouring: {
      std::string out = "colours " + std::to_string(spec.colours) + "\n";
      for (const auto& n : spec.nodes) out += n + "\n";
      for (const auto& [a, b] : spec.edges) out += spec.nodes[a] + " " + spec.nodes[b] + "\n";
      return out;
    }
    case PuzzleKind::Hamming74:
      return json{{"received", spec.received}, {"flip_prob", spec.flip_prob}}.dump();
    default:
      break;
  }
  json doc{{"kind", to_string(spec.kind)}, {"rows", spec.rows}, {"cols", spec.cols}};
  auto cages = json::array();
  for (const auto& cage : spec.cages) {
    auto cells = json::array();
    for (const auto& c : cage.cells) cells.push_back({c.row, c.col});
    cages.push_back({{"cells", cells}, {"target", cage.target}, {"op", to_string(cage.op)}});
  }
  doc["cages"] = cages;
  auto clues = json::array();
  for (const auto& c : spec.clues) clues.push_back({c.cell.row, c.cell.col, c.value});
  doc["clues"] = clues;
  return doc.dump();
}

std::vector<Cell> puzzle_cells(const PuzzleSpec& spec) {
  std::vector<Cell> cells;
  switch (spec.kind) {
    case PuzzleKind::Kakuro: {
      std::set<Cell> in_runs;
      for (const auto& cage : spec.cages) in_runs.insert(cage.cells.begin(), cage.cells.end());
      cells.assign(in_runs.begin(), in_runs.end());
      break;
    }
    case PuzzleKind::GraphColouring:
      for (std::size_t i = 0; i < spec.nodes.size(); ++i) cells.push_back({static_cast<int>(i), 0});
      break;
    case PuzzleKind::Hamming74:
      for (int i = 0; i < 7; ++i) cells.push_back({i, 0});
      break;
    default:
      for (int r = 0; r < spec.rows; ++r)
        for (int c = 0; c < spec.cols; ++c) cells.push_back({r, c});
  }
  return cells;
}

int value_offset(PuzzleKind kind) {
  return is_latin(kind) || kind == PuzzleKind::Kakuro ? 1 : 0;
}

PuzzleModel build_factors(const PuzzleSpec& input) {
  PuzzleSpec spec = input;
  validate(spec);
  PuzzleModel model;
  model.offset = value_offset(spec.kind);

  if (spec.kind == PuzzleKind::Hamming74) {
    std::vector<VarId> bits, recv;
    auto factors = hamming_factors(spec, model.registry, bits, recv);
    model.cell_vars = bits;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      if (k < 3) {
        model.factors.push_back(std::move(factors[k]));
      } else {
        const auto i = static_cast<int>(k - 3);
        model.factors.push_back(
            reduce(factors[k], {{recv[i], static_cast<Value>(bit_of(spec.received, i))}}));
      }
    }
    return model;
  }

  const auto cells = puzzle_cells(spec);
  const int card = cardinality(spec);
  std::vector<std::string> symbols;
  for (int k = 0; k < card; ++k) symbols.push_back(std::to_string(model.offset + k));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string label = spec.kind == PuzzleKind::GraphColouring
                            ? spec.nodes[i]
                            : "r" + std::to_string(cells[i].row + 1) + "c" + std::to_string(cells[i].col + 1);
    model.cell_vars.push_back(model.registry.add(std::move(label), symbols));
  }

  std::map<std::size_t, int> given;
  if (clues_are_givens(spec.kind)) {
    const auto idx = cell_index(cells);
    for (const auto& clue : spec.clues) {
      const auto c = idx.at(clue.cell);
      given.emplace(c, clue.value);
      model.clues.emplace(model.cell_vars[c], static_cast<Value>(clue.value - model.offset));
    }
  }
  for (const auto& rule : rules_of(spec)) {
    auto f = rule_factor(rule, model, card, given);
    if (f.arity() == 0 && !f.empty()) continue;
    model.factors.push_back(std::move(f));
  }
  return model;
}

std::vector<int> to_values(const PuzzleModel& model, const Assignment& assignment) {
  std::vector<int> out(model.cell_vars.size(), -1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto v = model.cell_vars[i];
    if (auto it = model.clues.find(v); it != model.clues.end())
      out[i] = model.offset + it->second;
    else if (auto jt = assignment.find(v); jt != assignment.end())
      out[i] = model.offset + jt->second;
  }
  return out;
}

bool verify_solution(const PuzzleSpec& spec, const std::vector<int>& values) {
  const auto cells = puzzle_cells(spec);
  if (values.size() != cells.size() || std::ranges::any_of(values, [](int v) { return v < 0; }))
    fail(ErrorCode::IncompleteAssignment, "every puzzle cell needs a value");

  switch (spec.kind) {
    case PuzzleKind::GraphColouring:
      for (int v : values)
        if (v >= spec.colours) return false;
      for (const auto& [a, b] : spec.edges)
        if (values[a] == values[b]) return false;
      return true;
    case PuzzleKind::Hamming74: {
      for (int v : values)
        if (v > 1) return false;
      const auto& b = values;
      return b[4] == (b[0] ^ b[1] ^ b[2]) && b[5] == (b[1] ^ b[2] ^ b[3]) && b[6] == (b[0] ^ b[2] ^ b[3]);
    }
    default:
      break;
  }

  std::map<Cell, int> grid;
  for (std::size_t i = 0; i < cells.size(); ++i) grid[cells[i]] = values[i];
  auto get = [&](int r, int c) { return grid.at(Cell{r, c}); };

  if (spec.kind == PuzzleKind::FillAPix) {
    for (int v : values)
      if (v > 1) return false;
    for (const auto& clue : spec.clues) {
      int painted = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell c{clue.cell.row + dr, clue.cell.col + dc};
          if (in_grid(spec, c)) painted += grid.at(c);
        }
      if (painted != clue.value) return false;
    }
    return true;
  }

  for (const auto& clue : spec.clues)
    if (grid.at(clue.cell) != clue.value) return false;

  if (spec.kind == PuzzleKind::Kakuro) {
    for (int v : values)
      if (v < 1 || v > 9) return false;
  } else {
    const int n = spec.rows;
    auto is_permutation = [&](const std::vector<int>& group) {
      std::vector<int> sorted = group;
      std::ranges::sort(sorted);
      for (int k = 0; k < n; ++k)
        if (sorted[static_cast<std::size_t>(k)] != k + 1) return false;
      return true;
    };
    for (int r = 0; r < n; ++r) {
      std::vector<int> row, col;
      for (int c = 0; c < n; ++c) {
        row.push_back(get(r, c));
        col.push_back(get(c, r));
      }
      if (!is_permutation(row) || !is_permutation(col)) return false;
    }
    if (spec.kind != PuzzleKind::Calcudoku) {
      const int b = n == 4 ? 2 : 3;
      for (int br = 0; br < n; br += b)
        for (int bc = 0; bc < n; bc += b) {
          std::vector<int> box;
          for (int r = br; r < br + b; ++r)
            for (int c = bc; c < bc + b; ++c) box.push_back(get(r, c));
          if (!is_permutation(box)) return false;
        }
    }
  }

  for (const auto& cage : spec.cages) {
    std::vector<int> v;
    for (const auto& c : cage.cells) v.push_back(grid.at(c));
    const bool distinct_required = spec.kind != PuzzleKind::Calcudoku;
    if (distinct_required && std::set<int>(v.begin(), v.end()).size() != v.size()) return false;
    if (!cage_holds(cage.op, cage.target, v)) return false;
  }
  return true;
}

BruteForceResult brute_force(const PuzzleSpec& input, std::size_t cap,
                             std::optional<Clock::time_point> deadline) {
  PuzzleSpec spec = input;
  validate(spec);
  return Backtracker(spec, cap, deadline).run();
}

std::string hamming_encode(std::string_view message) {
  if (message.size() != 4 || !std::ranges::all_of(message, [](char ch) { return ch == '0' || ch == '1'; }))
    fail(ErrorCode::MalformedSpec, "message must be 4 bits");
  const std::string m(message);
  const int b1 = bit_of(m, 0), b2 = bit_of(m, 1), b3 = bit_of(m, 2), b4 = bit_of(m, 3);
  std::string out = m;
  out.push_back(static_cast<char>('0' + (b1 ^ b2 ^ b3)));
  out.push_back(static_cast<char>('0' + (b2 ^ b3 ^ b4)));
  out.push_back(static_cast<char>('0' + (b1 ^ b3 ^ b4)));
  return out;
}

ClusterGraph hamming_graph(const PuzzleSpec& input, VariableRegistry* registry) {
  PuzzleSpec spec = input;
  if (spec.kind != PuzzleKind::Hamming74) malformed("not a Hamming spec");
  validate(spec);
  VariableRegistry local;
  auto& reg = registry ? *registry : local;
  std::vector<VarId> bits, recv;
  auto factors = hamming_factors(spec, reg, bits, recv);
  Assignment evidence;
  for (int i = 0; i < 7; ++i) evidence[recv[i]] = static_cast<Value>(bit_of(spec.received, i));
  return ltrip(std::move(factors)).observed(evidence);
}

HammingDecode decode_hamming(const PuzzleSpec& spec, const ConvergenceConfig& config) {
  VariableRegistry registry;
  const auto graph = hamming_graph(spec, &registry);
  const auto run = loopy_propagate(graph, config);
  HammingDecode out;
  out.stats = run.stats;
  for (int i = 0; i < 7; ++i) {
    const VarId b = *registry.find("B" + std::to_string(i + 1));
    std::optional<std::size_t> best;
    for (const auto& c : graph.clusters())
      if (std::ranges::binary_search(c.scope, b) && (!best || c.scope.size() < graph.cluster(*best).scope.size()))
        best = c.id;
    const VarId keep[] = {b};
    const auto marginal = normalize(marginalize(run.beliefs[*best].table, keep, config.mode), NormMode::Sum);
    const Value one[] = {1};
    out.p_one[i] = marginal.at(one);
  }
  fill_from_p_one(out);
  return out;
}

HammingDecode hamming_exact(const PuzzleSpec& input) {
  PuzzleSpec spec = input;
  validate(spec);
  HammingDecode out;
  double total = 0.0;
  double best_weight = -1.0;
  std::string best;
  std::array<double, 7> mass_one{};
  for (int m = 0; m < 16; ++m) {
    std::string msg;
    for (int k = 3; k >= 0; --k) msg.push_back(static_cast<char>('0' + ((m >> k) & 1)));
    const auto word = hamming_encode(msg);
    double w = 1.0;
    for (int i = 0; i < 7; ++i) w *= word[i] == spec.received[i] ? 1.0 - spec.flip_prob : spec.flip_prob;
    total += w;
    for (int i = 0; i < 7; ++i)
      if (word[i] == '1') mass_one[i] += w;
    if (w > best_weight) {
      best_weight = w;
      best = word;
    }
  }
  for (int i = 0; i < 7; ++i) out.p_one[i] = mass_one[i] / total;
  out.codeword = best;
  out.message = best.substr(0, 4);
  for (int i = 0; i < 7; ++i) out.confidence[i] = best[i] == '1' ? out.p_one[i] : 1.0 - out.p_one[i];
  out.stats.converged = true;
  return out;
}

}  // namespace pgm
