#include "bnmat/parsers.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "bnmat/error.hpp"

namespace bnmat {

NetworkStats network_stats(const BayesianNetwork& net) {
    NetworkStats s;
    s.node_count = net.size();
    s.edge_count = net.edge_count();
    for (const Factor& f : net.cpts()) s.parameter_count += f.size();
    s.avg_degree = s.node_count ? 2.0 * static_cast<double>(s.edge_count) / static_cast<double>(s.node_count) : 0.0;
    return s;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, int line, int column) {
    double v = 0.0;
    const char* first = token.data();
    if (!token.empty() && token.front() == '+') ++first;
    auto res = std::from_chars(first, token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v))
        throw ParseError(ParseIssue::invalid_value, "malformed number '" + std::string(token) + "'", line, column);
    return v;
}

long long parse_integer(std::string_view token, int line, int column) {
    long long v = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw ParseError(ParseIssue::invalid_value, "malformed integer '" + std::string(token) + "'", line, column);
    return v;
}

namespace {

// ---------------------------------------------------------------- BIF lexer

struct Token {
    enum class Kind { word, punct, end } kind;
    std::string text;
    int line;
    int column;
};

bool is_punct(char c) {
    return c == '{' || c == '}' || c == '[' || c == ']' || c == '(' || c == ')' || c == '|' ||
           c == ',' || c == ';';
}

class BifLexer {
public:
    explicit BifLexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_space_and_comments();
        if (pos_ >= text_.size()) return {Token::Kind::end, "", line_, col_};
        const int line = line_, col = col_;
        const char c = text_[pos_];
        if (is_punct(c)) {
            advance();
            return {Token::Kind::punct, std::string(1, c), line, col};
        }
        if (c == '"') {
            advance();
            std::string word;
            while (pos_ < text_.size() && text_[pos_] != '"') word += advance();
            if (pos_ >= text_.size()) throw ParseError(ParseIssue::syntax, "unterminated string", line, col);
            advance();
            return {Token::Kind::word, word, line, col};
        }
        std::string word;
        while (pos_ < text_.size() && !is_punct(text_[pos_]) && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '"' && !starts_comment())
            word += advance();
        return {Token::Kind::word, word, line, col};
    }

    // Raw text up to (not including) the next ';'.
    std::string raw_until_semicolon() {
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != ';') out += advance();
        return out;
    }

private:
    char advance() {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    bool starts_comment() const {
        return pos_ + 1 < text_.size() && text_[pos_] == '/' && (text_[pos_ + 1] == '/' || text_[pos_ + 1] == '*');
    }

    void skip_space_and_comments() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (starts_comment() && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (starts_comment()) {
                const int line = line_, col = col_;
                advance();
                advance();
                while (pos_ + 1 < text_.size() && !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) advance();
                if (pos_ + 1 >= text_.size()) throw ParseError(ParseIssue::syntax, "unterminated comment", line, col);
                advance();
                advance();
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// ---------------------------------------------------------------- BIF parser

struct PendingCpt {
    VarId child;
    std::vector<VarId> parents;
    std::vector<double> values;  // child fastest, first parent next, last parent slowest
    std::vector<bool> filled;    // per parent assignment
    int line;
    int column;
};

class BifParser {
public:
    explicit BifParser(std::string_view text) : lex_(text) { shift(); }

    BayesianNetwork parse() {
        while (tok_.kind != Token::Kind::end) {
            const Token kw = expect_word();
            if (kw.text == "network") {
                parse_network_block();
            } else if (kw.text == "variable") {
                parse_variable();
            } else if (kw.text == "probability") {
                parse_probability();
            } else {
                throw ParseError(ParseIssue::syntax, "unexpected keyword '" + kw.text + "'", kw.line, kw.column);
            }
        }
        return assemble();
    }

private:
    void shift() { tok_ = lex_.next(); }

    Token expect_word() {
        if (tok_.kind != Token::Kind::word)
            throw ParseError(ParseIssue::syntax, "expected a word, found " + describe(tok_), tok_.line, tok_.column);
        Token t = tok_;
        shift();
        return t;
    }

    void expect(char c) {
        if (tok_.kind != Token::Kind::punct || tok_.text[0] != c)
            throw ParseError(ParseIssue::syntax, std::string("expected '") + c + "', found " + describe(tok_),
                             tok_.line, tok_.column);
        shift();
    }

    bool at(char c) const { return tok_.kind == Token::Kind::punct && tok_.text[0] == c; }

    static std::string describe(const Token& t) {
        if (t.kind == Token::Kind::end) return "end of input";
        return "'" + t.text + "'";
    }

    // `property` bodies are kept verbatim.
    void parse_property() {
        std::string body;
        if (!at(';')) {
            body = tok_.text + lex_.raw_until_semicolon();
            shift();
        }
        expect(';');
        while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.pop_back();
        comments_.push_back("property " + body);
    }

    void parse_network_block() {
        while (!at('{')) {
            if (tok_.kind == Token::Kind::end)
                throw ParseError(ParseIssue::syntax, "unexpected end of input in network header", tok_.line, tok_.column);
            shift();
        }
        expect('{');
        while (!at('}')) {
            const Token kw = expect_word();
            if (kw.text != "property")
                throw ParseError(ParseIssue::syntax, "unexpected '" + kw.text + "' in network block", kw.line, kw.column);
            parse_property();
        }
        expect('}');
    }

    void parse_variable() {
        const Token name = expect_word();
        if (index_.count(name.text))
            throw ParseError(ParseIssue::syntax, "variable '" + name.text + "' declared twice", name.line, name.column);
        expect('{');
        std::optional<Variable> var;
        while (!at('}')) {
            const Token kw = expect_word();
            if (kw.text == "property") {
                parse_property();
                continue;
            }
            if (kw.text != "type")
                throw ParseError(ParseIssue::syntax, "unexpected '" + kw.text + "' in variable block", kw.line, kw.column);
            const Token kind = expect_word();
            if (kind.text != "discrete")
                throw ParseError(ParseIssue::syntax, "only discrete variables are supported", kind.line, kind.column);
            expect('[');
            const Token k = expect_word();
            const long long card = parse_integer(k.text, k.line, k.column);
            if (card < 1) throw ParseError(ParseIssue::invalid_value, "cardinality must be positive", k.line, k.column);
            expect(']');
            expect('{');
            Variable v;
            v.id = static_cast<VarId>(variables_.size());
            v.name = name.text;
            v.cardinality = static_cast<int>(card);
            while (!at('}')) {
                v.states.push_back(expect_word().text);
                if (at(',')) shift();
            }
            const Token close = tok_;
            expect('}');
            expect(';');
            if (v.states.size() != static_cast<std::size_t>(card))
                throw ParseError(ParseIssue::row_count,
                                 "variable '" + name.text + "' declares " + std::to_string(card) + " states but lists " +
                                     std::to_string(v.states.size()),
                                 close.line, close.column);
            var = std::move(v);
        }
        expect('}');
        if (!var) throw ParseError(ParseIssue::syntax, "variable '" + name.text + "' has no type", name.line, name.column);
        index_.emplace(var->name, var->id);
        variables_.push_back(std::move(*var));
    }

    VarId lookup(const Token& t) const {
        auto it = index_.find(t.text);
        if (it == index_.end())
            throw ParseError(ParseIssue::unknown_reference, "unknown variable '" + t.text + "'", t.line, t.column);
        return it->second;
    }

    int state_index(VarId v, const Token& t) const {
        const auto& states = variables_[static_cast<std::size_t>(v)].states;
        auto it = std::find(states.begin(), states.end(), t.text);
        if (it == states.end())
            throw ParseError(ParseIssue::unknown_reference,
                             "unknown state '" + t.text + "' of variable '" + variables_[static_cast<std::size_t>(v)].name + "'",
                             t.line, t.column);
        return static_cast<int>(it - states.begin());
    }

    std::vector<double> read_numbers() {
        std::vector<double> out;
        while (!at(';')) {
            const Token t = expect_word();
            out.push_back(parse_double(t.text, t.line, t.column));
            if (at(',')) shift();
        }
        expect(';');
        return out;
    }

    void parse_probability() {
        const Token open = tok_;
        expect('(');
        const Token child_tok = expect_word();
        PendingCpt cpt{lookup(child_tok), {}, {}, {}, open.line, open.column};
        if (at('|')) {
            shift();
            while (!at(')')) {
                const Token p = expect_word();
                cpt.parents.push_back(lookup(p));
                if (at(',')) shift();
            }
        }
        expect(')');
        if (pending_.count(cpt.child))
            throw ParseError(ParseIssue::syntax, "second probability block for '" + child_tok.text + "'", open.line, open.column);

        const auto child_card = static_cast<std::size_t>(variables_[static_cast<std::size_t>(cpt.child)].cardinality);
        std::size_t rows = 1;
        for (VarId p : cpt.parents) rows *= static_cast<std::size_t>(variables_[static_cast<std::size_t>(p)].cardinality);
        cpt.values.assign(rows * child_card, 0.0);
        cpt.filled.assign(rows, false);
        std::optional<std::vector<double>> default_row;

        expect('{');
        while (!at('}')) {
            if (at('(')) {
                const Token row_open = tok_;
                shift();
                std::size_t row = 0, radix = 1;
                std::size_t given = 0;
                while (!at(')')) {
                    const Token s = expect_word();
                    if (given >= cpt.parents.size())
                        throw ParseError(ParseIssue::row_count, "too many parent states in row", s.line, s.column);
                    const VarId p = cpt.parents[given++];
                    row += static_cast<std::size_t>(state_index(p, s)) * radix;
                    radix *= static_cast<std::size_t>(variables_[static_cast<std::size_t>(p)].cardinality);
                    if (at(',')) shift();
                }
                shift();
                if (given != cpt.parents.size())
                    throw ParseError(ParseIssue::row_count, "row names " + std::to_string(given) + " parent states, expected " +
                                                                std::to_string(cpt.parents.size()),
                                     row_open.line, row_open.column);
                const auto values = read_numbers();
                if (values.size() != child_card)
                    throw ParseError(ParseIssue::row_count,
                                     "row has " + std::to_string(values.size()) + " values, expected " + std::to_string(child_card),
                                     row_open.line, row_open.column);
                if (cpt.filled[row])
                    throw ParseError(ParseIssue::row_count, "parent assignment listed twice", row_open.line, row_open.column);
                cpt.filled[row] = true;
                std::copy(values.begin(), values.end(), cpt.values.begin() + static_cast<std::ptrdiff_t>(row * child_card));
                continue;
            }
            const Token kw = expect_word();
            if (kw.text == "property") {
                parse_property();
            } else if (kw.text == "table") {
                const auto values = read_numbers();
                if (values.size() != cpt.values.size())
                    throw ParseError(ParseIssue::row_count,
                                     "table has " + std::to_string(values.size()) + " values, expected " +
                                         std::to_string(cpt.values.size()),
                                     kw.line, kw.column);
                cpt.values = values;
                std::fill(cpt.filled.begin(), cpt.filled.end(), true);
            } else if (kw.text == "default") {
                auto values = read_numbers();
                if (values.size() != child_card)
                    throw ParseError(ParseIssue::row_count, "default row has wrong length", kw.line, kw.column);
                default_row = std::move(values);
            } else {
                throw ParseError(ParseIssue::syntax, "unexpected '" + kw.text + "' in probability block", kw.line, kw.column);
            }
        }
        expect('}');
        for (std::size_t r = 0; r < rows; ++r) {
            if (cpt.filled[r]) continue;
            if (!default_row)
                throw ParseError(ParseIssue::row_count,
                                 "probability block for '" + child_tok.text + "' covers " +
                                     std::to_string(std::count(cpt.filled.begin(), cpt.filled.end(), true)) + " of " +
                                     std::to_string(rows) + " parent assignments",
                                 open.line, open.column);
            std::copy(default_row->begin(), default_row->end(), cpt.values.begin() + static_cast<std::ptrdiff_t>(r * child_card));
        }
        pending_.emplace(cpt.child, std::move(cpt));
    }

    BayesianNetwork assemble() {
        if (variables_.empty()) throw ParseError(ParseIssue::syntax, "document declares no variables");
        std::vector<int> cards;
        for (const auto& v : variables_) cards.push_back(v.cardinality);
        std::vector<std::vector<VarId>> parents(variables_.size());
        std::vector<Factor> cpts;
        for (const auto& v : variables_) {
            auto it = pending_.find(v.id);
            if (it == pending_.end())
                throw ParseError(ParseIssue::unknown_reference, "variable '" + v.name + "' has no probability block");
            PendingCpt& p = it->second;
            renormalize(p, v);
            parents[static_cast<std::size_t>(v.id)] = p.parents;
            cpts.push_back(to_factor(p, cards));
        }
        BayesianNetwork net(variables_, std::move(parents), std::move(cpts), comments_);
        require_valid(net);
        return net;
    }

    // Rows already summing to one up to rounding are kept verbatim.
    static constexpr double kRowExactTolerance = 1e-12;

    void renormalize(PendingCpt& p, const Variable& v) const {
        const auto card = static_cast<std::size_t>(v.cardinality);
        for (std::size_t r = 0; r * card < p.values.size(); ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < card; ++c) sum += p.values[r * card + c];
            if (std::abs(sum - 1.0) > kBifRenormalizeTolerance)
                throw ValidationError("CPT of " + v.name + " has a row summing to " + format_double(sum) + " (line " +
                                      std::to_string(p.line) + ")");
            if (std::abs(sum - 1.0) <= kRowExactTolerance) continue;
            for (std::size_t c = 0; c < card; ++c) p.values[r * card + c] /= sum;
        }
    }

    // File layout (child fastest, then parents first-fastest) to ascending-id row-major.
    static Factor to_factor(const PendingCpt& p, const std::vector<int>& cards) {
        auto [scope, scards] = cpt_scope(p.child, p.parents, cards);
        std::vector<VarId> file_order;  // fastest first
        file_order.push_back(p.child);
        file_order.insert(file_order.end(), p.parents.begin(), p.parents.end());
        std::vector<std::size_t> out_stride(scope.size());
        std::size_t s = 1;
        for (std::size_t i = scope.size(); i-- > 0;) {
            out_stride[i] = s;
            s *= static_cast<std::size_t>(scards[i]);
        }
        std::vector<std::size_t> stride_by_file(file_order.size());
        std::vector<int> card_by_file(file_order.size());
        for (std::size_t i = 0; i < file_order.size(); ++i) {
            const auto pos = static_cast<std::size_t>(std::lower_bound(scope.begin(), scope.end(), file_order[i]) - scope.begin());
            stride_by_file[i] = out_stride[pos];
            card_by_file[i] = scards[pos];
        }
        std::vector<double> out(p.values.size());
        std::vector<int> digit(file_order.size(), 0);
        std::size_t target = 0;
        for (double value : p.values) {
            out[target] = value;
            for (std::size_t d = 0; d < digit.size(); ++d) {
                if (++digit[d] < card_by_file[d]) {
                    target += stride_by_file[d];
                    break;
                }
                target -= static_cast<std::size_t>(card_by_file[d] - 1) * stride_by_file[d];
                digit[d] = 0;
            }
        }
        return Factor(std::move(scope), std::move(scards), std::move(out));
    }

    BifLexer lex_;
    Token tok_{};
    std::vector<Variable> variables_;
    std::map<std::string, VarId> index_;
    std::map<VarId, PendingCpt> pending_;
    std::vector<std::string> comments_;
};

// ---------------------------------------------------------------- native format

std::vector<std::string_view> split_words(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::vector<long long> parse_id_list(std::string_view text, int line) {
    std::vector<long long> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        out.push_back(parse_integer(text.substr(start, comma - start), line, static_cast<int>(start) + 1));
        start = comma + 1;
    }
    return out;
}

}  // namespace

BayesianNetwork parse_bif(std::string_view text) { return BifParser(text).parse(); }

std::string serialize_native(const BayesianNetwork& net) {
    std::ostringstream out;
    out << "bn " << net.size() << '\n';
    for (const auto& c : net.comments()) out << "# " << c << '\n';
    for (const auto& v : net.variables()) {
        out << "var " << v.id << ' ' << v.name << ' ' << v.cardinality;
        for (const auto& s : v.states) out << ' ' << s;
        out << '\n';
    }
    for (const auto& v : net.variables()) {
        out << "cpt " << v.id;
        for (VarId p : net.parents(v.id)) out << ' ' << p;
        out << " :";
        for (double x : net.cpt(v.id).values()) out << ' ' << format_double(x);
        out << '\n';
    }
    return out.str();
}

BayesianNetwork parse_native(std::string_view text) {
    std::vector<Variable> variables;
    std::vector<std::vector<VarId>> parents;
    std::vector<std::optional<std::vector<double>>> values;
    std::vector<std::string> comments;
    std::optional<std::size_t> n;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos) continue;
        if (line[first] == '#') {
            std::string_view body = line.substr(first + 1);
            if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            comments.emplace_back(body);
            continue;
        }
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto words = split_words(line);
        const auto col = static_cast<int>(first) + 1;
        if (words[0] == "bn") {
            if (n || words.size() != 2) throw ParseError(ParseIssue::syntax, "malformed or repeated 'bn' header", line_no, col);
            const auto count = parse_integer(words[1], line_no, col);
            if (count < 1) throw ParseError(ParseIssue::invalid_value, "network needs at least one variable", line_no, col);
            n = static_cast<std::size_t>(count);
            parents.resize(*n);
            values.resize(*n);
            continue;
        }
        if (!n) throw ParseError(ParseIssue::syntax, "expected 'bn <n>' header", line_no, col);
        if (words[0] == "var") {
            if (words.size() < 4) throw ParseError(ParseIssue::syntax, "var line needs id, name and cardinality", line_no, col);
            Variable v;
            v.id = static_cast<VarId>(parse_integer(words[1], line_no, col));
            if (v.id != static_cast<VarId>(variables.size()) || variables.size() >= *n)
                throw ParseError(ParseIssue::syntax, "var ids must appear in order 0..n-1", line_no, col);
            v.name = std::string(words[2]);
            const auto card = parse_integer(words[3], line_no, col);
            if (card < 1) throw ParseError(ParseIssue::invalid_value, "cardinality must be positive", line_no, col);
            v.cardinality = static_cast<int>(card);
            for (std::size_t i = 4; i < words.size(); ++i) v.states.emplace_back(words[i]);
            if (v.states.size() != static_cast<std::size_t>(card))
                throw ParseError(ParseIssue::row_count, "var line lists " + std::to_string(v.states.size()) + " states, expected " +
                                                            std::to_string(card),
                                 line_no, col);
            variables.push_back(std::move(v));
        } else if (words[0] == "cpt") {
            if (variables.size() != *n) throw ParseError(ParseIssue::syntax, "cpt line before all variables are declared", line_no, col);
            if (words.size() < 2) throw ParseError(ParseIssue::syntax, "cpt line needs an id", line_no, col);
            const auto id = parse_integer(words[1], line_no, col);
            if (id < 0 || static_cast<std::size_t>(id) >= *n)
                throw ParseError(ParseIssue::unknown_reference, "cpt for unknown variable " + std::to_string(id), line_no, col);
            auto& slot = values[static_cast<std::size_t>(id)];
            if (slot) throw ParseError(ParseIssue::syntax, "second cpt line for variable " + std::to_string(id), line_no, col);
            std::size_t i = 2;
            std::vector<VarId> ps;
            for (; i < words.size() && words[i] != ":"; ++i) {
                const auto p = parse_integer(words[i], line_no, col);
                if (p < 0 || static_cast<std::size_t>(p) >= *n)
                    throw ParseError(ParseIssue::unknown_reference, "unknown parent id " + std::to_string(p), line_no, col);
                ps.push_back(static_cast<VarId>(p));
            }
            if (i == words.size()) throw ParseError(ParseIssue::syntax, "cpt line is missing ':'", line_no, col);
            std::vector<double> vals;
            for (++i; i < words.size(); ++i) vals.push_back(parse_double(words[i], line_no, col));
            parents[static_cast<std::size_t>(id)] = std::move(ps);
            slot = std::move(vals);
        } else {
            throw ParseError(ParseIssue::syntax, "unknown directive '" + std::string(words[0]) + "'", line_no, col);
        }
    }
    if (!n) throw ParseError(ParseIssue::syntax, "missing 'bn <n>' header");
    if (variables.size() != *n) throw ParseError(ParseIssue::row_count, "header announces " + std::to_string(*n) + " variables");
    std::vector<int> cards;
    for (const auto& v : variables) cards.push_back(v.cardinality);
    std::vector<Factor> cpts;
    for (std::size_t i = 0; i < *n; ++i) {
        if (!values[i]) throw ParseError(ParseIssue::row_count, "variable " + std::to_string(i) + " has no cpt line");
        auto [scope, scards] = cpt_scope(static_cast<VarId>(i), parents[i], cards);
        std::size_t expected = 1;
        for (int c : scards) expected *= static_cast<std::size_t>(c);
        if (values[i]->size() != expected)
            throw ParseError(ParseIssue::row_count, "cpt of variable " + std::to_string(i) + " has " +
                                                        std::to_string(values[i]->size()) + " values, expected " +
                                                        std::to_string(expected));
        cpts.emplace_back(std::move(scope), std::move(scards), std::move(*values[i]));
    }
    BayesianNetwork net(std::move(variables), std::move(parents), std::move(cpts), std::move(comments));
    require_valid(net);
    return net;
}

std::string read_text_file(const std::string& path) {
    gzFile file = gzopen(path.c_str(), "rb");
    if (!file) throw IoError("cannot open " + path);
    std::unique_ptr<gzFile_s, int (*)(gzFile)> guard(file, gzclose);
    std::string out;
    char buf[1 << 16];
    for (;;) {
        const int got = gzread(file, buf, sizeof buf);
        if (got < 0) throw IoError("read error in " + path);
        if (got == 0) break;
        out.append(buf, static_cast<std::size_t>(got));
    }
    return out;
}

void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write error in " + path);
}

BayesianNetwork parse_network(std::string_view text) {
    const auto words = split_words(text.substr(0, text.find('\n')));
    if (!words.empty() && words[0] == "bn") return parse_native(text);
    return parse_bif(text);
}

BayesianNetwork load_network(const std::string& path) { return parse_network(read_text_file(path)); }

std::string format_factor(const Factor& f) {
    std::string out = "factor scope=";
    for (std::size_t i = 0; i < f.scope().size(); ++i) out += (i ? "," : "") + std::to_string(f.scope()[i]);
    out += " card=";
    for (std::size_t i = 0; i < f.scope().size(); ++i) out += (i ? "," : "") + std::to_string(f.cardinalities()[i]);
    out += " :";
    for (double v : f.values()) out += " " + format_double(v);
    return out;
}

Factor parse_factor_line(std::string_view line, int line_number) {
    const auto words = split_words(line);
    if (words.size() < 4 || words[0] != "factor" || words[1].substr(0, 6) != "scope=" || words[2].substr(0, 5) != "card=" ||
        words[3] != ":")
        throw ParseError(ParseIssue::syntax, "malformed factor block", line_number, 1);
    std::vector<VarId> scope;
    for (auto v : parse_id_list(words[1].substr(6), line_number)) scope.push_back(static_cast<VarId>(v));
    std::vector<int> cards;
    for (auto v : parse_id_list(words[2].substr(5), line_number)) cards.push_back(static_cast<int>(v));
    std::vector<double> values;
    for (std::size_t i = 4; i < words.size(); ++i) values.push_back(parse_double(words[i], line_number, 1));
    try {
        return Factor(std::move(scope), std::move(cards), std::move(values));
    } catch (const ContractError& e) {
        throw ParseError(ParseIssue::row_count, e.what(), line_number, 1);
    }
}

}  // namespace bnmat
