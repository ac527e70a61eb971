#include "reachrl/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace reachrl {

namespace {

struct Token {
    std::string text;
    int column; // 1-based
};

// Splits a line into whitespace-separated tokens, dropping `#` comments.
std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        if (line[i] == '#') break;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
               line[i] != '#') {
            ++i;
        }
        out.push_back(Token{line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            if (!current.empty() && current.back() == '\r') current.pop_back();
            lines.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty() && current.back() == '\r') current.pop_back();
    lines.push_back(current);
    return lines;
}

std::optional<std::uint64_t> parse_uint(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::uint64_t value = 0;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        if (value > (UINT64_MAX - 9) / 10) return std::nullopt;
        value = value * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return value;
}

StateId require_state(const Token& token, StateId num_states, int line) {
    auto value = parse_uint(token.text);
    if (!value) {
        throw ParseError("expected a state id, got '" + token.text + "'", line, token.column);
    }
    if (*value >= num_states) {
        throw ParseError("state " + token.text + " out of range (states = " +
                             std::to_string(num_states) + ")",
                         line, token.column);
    }
    return static_cast<StateId>(*value);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

Mdp parse_mdpx(const std::string& text, const std::string& target_label) {
    auto lines = split_lines(text);

    std::optional<StateId> num_states;
    std::optional<StateId> initial;
    std::vector<std::tuple<std::string, StateId, int>> labels; // name, state, line
    struct Tr {
        StateId src;
        std::string action;
        StateId dst;
        Rational prob;
        int line;
    };
    std::vector<Tr> transitions;
    bool saw_version = false;

    for (std::size_t idx = 0; idx < lines.size(); ++idx) {
        int line = static_cast<int>(idx) + 1;
        auto tokens = tokenize(lines[idx]);
        if (tokens.empty()) continue;
        const std::string& keyword = tokens[0].text;

        if (!saw_version) {
            if (keyword != "mdpx") {
                throw ParseError("expected 'mdpx <version>' header, got '" + keyword + "'", line,
                                 tokens[0].column);
            }
            if (tokens.size() != 2 || tokens[1].text != "1") {
                throw ParseError("unsupported mdpx version (expected 1)", line);
            }
            saw_version = true;
            continue;
        }

        if (keyword == "states") {
            if (num_states) throw ParseError("duplicate 'states' line", line);
            if (tokens.size() != 2) throw ParseError("usage: states <N>", line);
            auto n = parse_uint(tokens[1].text);
            if (!n || *n == 0 || *n > UINT32_MAX) {
                throw ParseError("invalid state count '" + tokens[1].text + "'", line,
                                 tokens[1].column);
            }
            num_states = static_cast<StateId>(*n);
        } else if (keyword == "initial") {
            if (!num_states) throw ParseError("'initial' before 'states'", line);
            if (initial) throw ParseError("duplicate 'initial' line", line);
            if (tokens.size() != 2) throw ParseError("usage: initial <i>", line);
            initial = require_state(tokens[1], *num_states, line);
        } else if (keyword == "label") {
            if (!num_states) throw ParseError("'label' before 'states'", line);
            if (tokens.size() < 2) throw ParseError("usage: label <name> <i> <j> ...", line);
            for (std::size_t t = 2; t < tokens.size(); ++t) {
                labels.emplace_back(tokens[1].text, require_state(tokens[t], *num_states, line),
                                    line);
            }
            if (tokens.size() == 2) {
                labels.emplace_back(tokens[1].text, UINT32_MAX, line); // empty label marker
            }
        } else if (keyword == "transition") {
            if (!num_states) throw ParseError("'transition' before 'states'", line);
            if (tokens.size() != 5) {
                throw ParseError("usage: transition <s> <action-name> <s'> <p/q | decimal>", line);
            }
            StateId src = require_state(tokens[1], *num_states, line);
            StateId dst = require_state(tokens[3], *num_states, line);
            auto prob = parse_probability(tokens[4].text);
            if (!prob) {
                throw ParseError("invalid probability literal '" + tokens[4].text + "'", line,
                                 tokens[4].column);
            }
            if (*prob <= 0) {
                throw ParseError("probability must be positive, got " + format_rational(*prob),
                                 line, tokens[4].column);
            }
            transitions.push_back(Tr{src, tokens[2].text, dst, *prob, line});
        } else {
            throw ParseError("unknown directive '" + keyword + "'", line, tokens[0].column);
        }
    }

    if (!saw_version) throw ParseError("empty document (missing 'mdpx 1' header)", 1);
    if (!num_states) throw ParseError("missing 'states' line", 1);

    MdpBuilder builder(*num_states);
    builder.set_initial(initial.value_or(0));
    builder.set_target_label(target_label);
    for (const auto& [name, state, line] : labels) {
        (void)line;
        if (state != UINT32_MAX) builder.add_label(name, state);
    }
    for (const auto& tr : transitions) {
        try {
            builder.add_transition(tr.src, tr.action, tr.dst, tr.prob);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), tr.line);
        }
    }

    Mdp m = builder.build_unchecked();
    auto violations = validate(m);
    if (!violations.empty()) {
        throw ParseError(violations.front().where + ": " + violations.front().message,
                         static_cast<int>(lines.size()));
    }
    return m;
}

Mdp parse_mdpx_file(const std::string& path, const std::string& target_label) {
    return parse_mdpx(read_file(path), target_label);
}

std::string write_mdpx(const Mdp& m) {
    std::ostringstream out;
    out << "mdpx 1\n";
    out << "states " << m.num_states() << "\n";
    out << "initial " << m.initial() << "\n";
    for (const auto& [name, states] : m.labels()) {
        if (states.empty()) continue;
        out << "label " << name;
        for (StateId s : states) out << " " << s;
        out << "\n";
    }
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& choice : m.choices(s)) { // sorted by action id
            for (const auto& t : choice.successors) { // sorted by dst
                out << "transition " << s << " " << m.action_name(choice.action) << " " << t.dst
                    << " " << format_rational(t.prob) << "\n";
            }
        }
    }
    return out.str();
}

bool structurally_equal(const Mdp& lhs, const Mdp& rhs) {
    if (lhs.num_states() != rhs.num_states()) return false;
    if (lhs.initial() != rhs.initial()) return false;
    if (lhs.target() != rhs.target()) return false;

    auto nonempty_labels = [](const Mdp& m) {
        std::map<std::string, std::set<StateId>> out;
        for (const auto& [name, states] : m.labels()) {
            if (!states.empty()) out.emplace(name, states);
        }
        return out;
    };
    if (nonempty_labels(lhs) != nonempty_labels(rhs)) return false;

    using Row = std::map<std::string, std::vector<std::pair<StateId, Rational>>>;
    auto row_of = [](const Mdp& m, StateId s) {
        Row row;
        for (const auto& choice : m.choices(s)) {
            auto& list = row[m.action_name(choice.action)];
            for (const auto& t : choice.successors) list.emplace_back(t.dst, t.prob);
        }
        return row;
    };
    for (StateId s = 0; s < lhs.num_states(); ++s) {
        if (row_of(lhs, s) != row_of(rhs, s)) return false;
    }
    return true;
}

ImportResult import_prism_explicit(const std::string& tra_text, const std::string& lab_text,
                                   const std::string& target_label) {
    ImportResult result;

    // ---- .lab ----
    auto lab_lines = split_lines(lab_text);
    std::map<std::uint64_t, std::string> label_names;
    std::map<std::string, std::set<StateId>> state_labels;
    bool saw_lab_header = false;
    for (std::size_t idx = 0; idx < lab_lines.size(); ++idx) {
        int line = static_cast<int>(idx) + 1;
        auto tokens = tokenize(lab_lines[idx]);
        if (tokens.empty()) continue;
        if (!saw_lab_header) {
            // <idx>="<name>" pairs
            for (const auto& token : tokens) {
                auto eq = token.text.find('=');
                if (eq == std::string::npos) {
                    throw ParseError(".lab header: expected <idx>=\"<name>\", got '" + token.text +
                                         "'",
                                     line, token.column);
                }
                auto idx_value = parse_uint(token.text.substr(0, eq));
                std::string name = token.text.substr(eq + 1);
                if (name.size() < 2 || name.front() != '"' || name.back() != '"') {
                    throw ParseError(".lab header: label name must be quoted in '" + token.text +
                                         "'",
                                     line, token.column);
                }
                if (!idx_value) {
                    throw ParseError(".lab header: bad label index in '" + token.text + "'", line,
                                     token.column);
                }
                label_names[*idx_value] = name.substr(1, name.size() - 2);
            }
            saw_lab_header = true;
            continue;
        }
        // <state>: <idx> <idx> ...
        std::string head = tokens[0].text;
        if (head.empty() || head.back() != ':') {
            throw ParseError(".lab: expected '<state>:', got '" + head + "'", line,
                             tokens[0].column);
        }
        auto state_value = parse_uint(head.substr(0, head.size() - 1));
        if (!state_value) {
            throw ParseError(".lab: bad state id in '" + head + "'", line, tokens[0].column);
        }
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            auto idx_value = parse_uint(tokens[t].text);
            if (!idx_value || label_names.find(*idx_value) == label_names.end()) {
                throw ParseError(".lab: unknown label index '" + tokens[t].text + "'", line,
                                 tokens[t].column);
            }
            state_labels[label_names[*idx_value]].insert(static_cast<StateId>(*state_value));
        }
    }
    if (!saw_lab_header) throw ParseError(".lab: missing header line", 1);

    // ---- .tra ----
    auto tra_lines = split_lines(tra_text);
    std::size_t cursor = 0;
    while (cursor < tra_lines.size() && tokenize(tra_lines[cursor]).empty()) ++cursor;
    if (cursor >= tra_lines.size()) throw ParseError(".tra: missing header line", 1);
    auto header = tokenize(tra_lines[cursor]);
    if (header.size() != 3) {
        throw ParseError(".tra: malformed header, expected '<nStates> <nChoices> <nTransitions>'",
                         static_cast<int>(cursor) + 1);
    }
    auto n_states = parse_uint(header[0].text);
    auto n_choices = parse_uint(header[1].text);
    auto n_transitions = parse_uint(header[2].text);
    if (!n_states || !n_choices || !n_transitions || *n_states == 0 || *n_states > UINT32_MAX) {
        throw ParseError(".tra: malformed header counts", static_cast<int>(cursor) + 1);
    }

    struct Row {
        std::uint64_t choice;
        StateId dst;
        Rational prob;
        std::string name;
        int line;
    };
    // per source state: choice index -> rows
    std::map<StateId, std::map<std::uint64_t, std::vector<Row>>> rows;
    std::uint64_t row_count = 0;
    for (std::size_t idx = cursor + 1; idx < tra_lines.size(); ++idx) {
        int line = static_cast<int>(idx) + 1;
        auto tokens = tokenize(tra_lines[idx]);
        if (tokens.empty()) continue;
        if (tokens.size() != 4 && tokens.size() != 5) {
            throw ParseError(".tra: expected '<src> <choiceIdx> <dst> <prob> [actionName]'", line);
        }
        auto src = parse_uint(tokens[0].text);
        auto choice = parse_uint(tokens[1].text);
        auto dst = parse_uint(tokens[2].text);
        auto prob = parse_probability(tokens[3].text);
        if (!src || !choice || !dst || *src >= *n_states || *dst >= *n_states) {
            throw ParseError(".tra: bad state/choice ids", line);
        }
        if (!prob || *prob <= 0 || *prob > 1) {
            throw ParseError(".tra: bad probability '" + tokens[3].text + "'", line,
                             tokens[3].column);
        }
        Row row{*choice, static_cast<StateId>(*dst), *prob,
                tokens.size() == 5 ? tokens[4].text : "", line};
        auto& bucket = rows[static_cast<StateId>(*src)][*choice];
        for (const auto& existing : bucket) {
            if (existing.dst == row.dst) {
                throw ParseError(".tra: duplicate transition (" + tokens[0].text + ", " +
                                     tokens[1].text + ", " + tokens[2].text + ")",
                                 line);
            }
        }
        bucket.push_back(std::move(row));
        ++row_count;
    }
    if (row_count != *n_transitions) {
        throw ParseError(".tra: malformed header: declares " + std::to_string(*n_transitions) +
                             " transitions, found " + std::to_string(row_count),
                         static_cast<int>(cursor) + 1);
    }

    // ---- assemble ----
    auto init_it = state_labels.find("init");
    if (init_it == state_labels.end() || init_it->second.empty()) {
        throw ParseError(".lab: no state labelled 'init'", 1);
    }
    if (init_it->second.size() > 1) {
        throw ParseError(".lab: multiple states labelled 'init'", 1);
    }
    if (state_labels.find(target_label) == state_labels.end()) {
        throw ParseError(".lab: target label '" + target_label + "' not declared", 1);
    }

    const Rational tolerance(1, 1000000000); // 1e-9
    MdpBuilder builder(static_cast<StateId>(*n_states));
    builder.set_initial(*init_it->second.begin());
    builder.set_target_label(target_label);
    for (const auto& [name, states] : state_labels) {
        for (StateId s : states) builder.add_label(name, s);
    }

    std::uint64_t assembled_choices = 0;
    for (auto& [src, choices] : rows) {
        std::uint64_t expected = 0;
        for (auto& [choice_idx, bucket] : choices) {
            if (choice_idx != expected) {
                throw ParseError(".tra: state " + std::to_string(src) +
                                     " has a gap in choice indices (missing choice " +
                                     std::to_string(expected) + ")",
                                 bucket.front().line);
            }
            ++expected;
            ++assembled_choices;

            std::string name;
            for (const auto& row : bucket) {
                if (!row.name.empty()) {
                    if (!name.empty() && name != row.name) {
                        throw ParseError(".tra: conflicting action names for state " +
                                             std::to_string(src) + " choice " +
                                             std::to_string(choice_idx),
                                         row.line);
                    }
                    name = row.name;
                }
            }
            if (name.empty()) name = "c" + std::to_string(choice_idx);

            Rational sum(0);
            for (const auto& row : bucket) sum += row.prob;
            if (abs(sum - 1) > tolerance) {
                throw ParseError(".tra: probabilities of state " + std::to_string(src) +
                                     " choice " + std::to_string(choice_idx) + " sum to " +
                                     format_rational(sum) + " (off by more than 1e-9)",
                                 bucket.front().line);
            }
            if (sum != 1) {
                Rational fix = bucket.back().prob + (1 - sum);
                result.warnings.push_back(
                    "state " + std::to_string(src) + " choice " + std::to_string(choice_idx) +
                    ": probabilities sum to " + format_rational(sum) +
                    "; last successor adjusted to " + format_rational(fix));
                bucket.back().prob = fix;
            }
            for (const auto& row : bucket) {
                builder.add_transition(src, name, row.dst, row.prob);
            }
        }
    }
    if (assembled_choices != *n_choices) {
        result.warnings.push_back("header declares " + std::to_string(*n_choices) +
                                  " choices, found " + std::to_string(assembled_choices));
    }

    Mdp m = builder.build_unchecked();
    auto violations = validate(m);
    if (!violations.empty()) {
        throw ParseError(violations.front().where + ": " + violations.front().message, 1);
    }
    result.model = std::move(m);
    return result;
}

ImportResult import_prism_explicit_files(const std::string& tra_path, const std::string& lab_path,
                                         const std::string& target_label) {
    return import_prism_explicit(read_file(tra_path), read_file(lab_path), target_label);
}

} // namespace reachrl
