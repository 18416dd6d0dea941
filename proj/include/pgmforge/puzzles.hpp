#pragma once

// Puzzle front-ends: parsing, compilation to constraint factors, an
// independent solution checker and a brute-force backtracking oracle.
//
// Every grid puzzle maps cells to variables in row-major order. Puzzle values
// (digits, pixel states, colour indices, bits) relate to domain indices by a
// fixed offset: digits start at 1, everything else at 0.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pgmforge/factor.hpp"
#include "pgmforge/graph.hpp"
#include "pgmforge/inference.hpp"
#include "pgmforge/variables.hpp"

namespace pgm {

enum class PuzzleKind {
  Sudoku4,
  Sudoku9,
  KillerSudoku,
  Calcudoku,
  Kakuro,
  FillAPix,
  GraphColouring,
  Hamming74,
};

std::string_view to_string(PuzzleKind kind);
/// sudoku4, sudoku9, killer, calcudoku, kakuro, fillapix, graph, hamming
/// (plus a few spelling variants).
PuzzleKind parse_kind(std::string_view text);

enum class CageOp { Sum, Add, Sub, Mul, Div, None };

std::string_view to_string(CageOp op);

struct Cell {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct Cage {
  std::vector<Cell> cells;
  int target = 0;
  CageOp op = CageOp::Sum;

  friend bool operator==(const Cage&, const Cage&) = default;
};

/// A given value at a cell. For Fill-a-pix it is the neighbourhood count
/// printed in that cell rather than the cell's own state.
struct Clue {
  Cell cell;
  int value = 0;

  friend bool operator==(const Clue&, const Clue&) = default;
};

struct PuzzleSpec {
  PuzzleKind kind = PuzzleKind::Sudoku9;
  int rows = 0;
  int cols = 0;
  /// Sorted row-major.
  std::vector<Clue> clues;
  /// Killer and Calcudoku cages; Kakuro runs.
  std::vector<Cage> cages;

  // Graph colouring.
  std::vector<std::string> nodes;
  /// Index pairs (a < b), sorted, without duplicates.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  int colours = 0;

  // Hamming(7,4) channel.
  std::string received;
  double flip_prob = 0.0;

  friend bool operator==(const PuzzleSpec&, const PuzzleSpec&) = default;
};

/// Formats: Sudoku as one line of 16 or 81 characters ('.' or '0' blank);
/// Killer, Calcudoku, Kakuro and Fill-a-pix as JSON with "rows", "cols",
/// "cages" and "clues"; graph colouring as one "u v" edge per line (a lone
/// name declares a node, a "colours K" line sets the colour count, '#' starts
/// a comment); Hamming as {"received": "1110010", "flip_prob": 0.1}.
/// `colours` applies to graph colouring when the text does not set it.
/// Throws ParseError, MalformedSpec or InconsistentClue.
PuzzleSpec parse(PuzzleKind kind, std::string_view text, int colours = 0);

std::string serialize(const PuzzleSpec& spec);

/// Puzzle positions in variable order: grid cells row-major (Kakuro: only
/// cells inside runs), graph nodes as {index, 0}, Hamming bits as {index, 0}.
std::vector<Cell> puzzle_cells(const PuzzleSpec& spec);

/// Value of domain index 0.
int value_offset(PuzzleKind kind);

struct PuzzleModel {
  VariableRegistry registry;
  /// Aligned with puzzle_cells(spec).
  std::vector<VarId> cell_vars;
  /// Given cells, already observed out of every factor.
  Assignment clues;
  std::vector<SparseFactor> factors;
  int offset = 0;
};

/// Compiles the puzzle into clue-reduced factors. Sudoku-like groups become
/// all-different permutation supports; cages, runs and counting clues list
/// their satisfying tuples; graph colouring uses one all-different factor per
/// maximal clique; Hamming gives three parity factors and seven channel
/// factors reduced by the received bits.
PuzzleModel build_factors(const PuzzleSpec& spec);

/// Puzzle values per cell from clues plus a (partial) assignment; -1 where
/// nothing is known.
std::vector<int> to_values(const PuzzleModel& model, const Assignment& assignment);

/// Re-checks every rule directly from the spec. Throws IncompleteAssignment
/// when `values` does not cover every cell.
bool verify_solution(const PuzzleSpec& spec, const std::vector<int>& values);

struct BruteForceResult {
  std::vector<std::vector<int>> solutions;
  bool truncated = false;
};

/// Exhaustive backtracking with forward checking and smallest-domain-first
/// branching; lists solutions in a deterministic order, at most `cap`.
BruteForceResult brute_force(const PuzzleSpec& spec, std::size_t cap,
                             std::optional<Clock::time_point> deadline = std::nullopt);

// Hamming(7,4): b5 = b1^b2^b3, b6 = b2^b3^b4, b7 = b1^b3^b4.

std::string hamming_encode(std::string_view message);

/// Ten factors (three parity, seven channel), LTRIP over them, then the
/// received bits observed.
ClusterGraph hamming_graph(const PuzzleSpec& spec, VariableRegistry* registry = nullptr);

struct HammingDecode {
  std::string codeword;
  std::string message;
  /// Posterior P(b_i = 1).
  std::array<double, 7> p_one{};
  /// Posterior of the decoded value of each bit.
  std::array<double, 7> confidence{};
  PropagationStats stats;
};

/// Loopy belief update on hamming_graph. SUM mode gives posterior marginals,
/// MAX mode max-marginals (normalised to sum to one per bit).
HammingDecode decode_hamming(const PuzzleSpec& spec, const ConvergenceConfig& config);

/// Exact posterior by enumerating all 16 codewords; the codeword is the MAP one.
HammingDecode hamming_exact(const PuzzleSpec& spec);

}  // namespace pgm
