#pragma once

#include "reachrl/mdp.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace reachrl {

/// Syntactic or semantic failure while reading a model file.
/// line/column are 1-based; column 0 means "whole line".
class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, int line, int column = 0)
        : std::runtime_error(format(message, line, column)),
          line_(line),
          column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    static std::string format(const std::string& message, int line, int column) {
        std::string out = "line " + std::to_string(line);
        if (column > 0) out += ", column " + std::to_string(column);
        return out + ": " + message;
    }
    int line_;
    int column_;
};

/// Parses the native MDPX text format.
///
///   mdpx 1
///   states <N>
///   initial <i>              (optional, defaults to 0)
///   label <name> <i> <j> ...
///   transition <s> <action-name> <s'> <p/q | decimal>
///
/// Line oriented, `#` starts a comment, tokens whitespace separated,
/// \n or \r\n line endings. The target set is the label named
/// `target_label` (empty target if the label is absent).
Mdp parse_mdpx(const std::string& text, const std::string& target_label = "goal");
Mdp parse_mdpx_file(const std::string& path, const std::string& target_label = "goal");

/// Canonical serialization: transitions sorted by (src, action index, dst),
/// probabilities in lowest terms. parse_mdpx(write_mdpx(m)) is structurally
/// equal to m.
std::string write_mdpx(const Mdp& m);

/// Name-based structural equality: same state count, initial, labels and
/// per-(state, action-name) successor distributions. Insensitive to action
/// table ordering.
bool structurally_equal(const Mdp& lhs, const Mdp& rhs);

struct ImportResult {
    Mdp model;
    std::vector<std::string> warnings;
};

/// Imports a PRISM explicit-state MDP from .tra/.lab content.
///
/// .tra: header `<nStates> <nChoices> <nTransitions>`, then rows
/// `<src> <choiceIdx> <dst> <prob> [actionName]` (choice indices are
/// per-state; unnamed choices get the synthetic name c<choiceIdx>).
/// .lab: header `<idx>="<name>" ...`, then rows `<state>: <idx> ...`.
/// Initial state = the unique state labelled `init`; target = states
/// carrying `target_label`. Per-choice probability sums off by more than
/// 1e-9 are rejected; smaller deviations are repaired by adjusting the
/// last successor, with a warning.
ImportResult import_prism_explicit(const std::string& tra_text, const std::string& lab_text,
                                   const std::string& target_label);
ImportResult import_prism_explicit_files(const std::string& tra_path, const std::string& lab_path,
                                         const std::string& target_label);

} // namespace reachrl
