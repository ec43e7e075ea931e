#include "ptflat/lattice_dsl.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "ptflat/io.hpp"

namespace ptflat {

namespace {

struct Token {
    std::string text;
    SourceLocation where;
};

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

std::string format_message(SourceLocation where, const std::string& message,
                           const std::vector<std::string>& expected) {
    std::string out = std::to_string(where.line) + ":" + std::to_string(where.column) + ": " + message;
    if (!expected.empty()) out += " (expected " + join(expected) + ")";
    return out;
}

std::vector<Token> tokenize(std::string_view line, int line_no) {
    std::vector<Token> out;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t i = 0;
    auto space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; };
    while (i < line.size()) {
        while (i < line.size() && space(line[i])) ++i;
        if (i >= line.size()) break;
        const std::size_t start = i;
        while (i < line.size() && !space(line[i])) ++i;
        out.push_back({std::string(line.substr(start, i - start)),
                       {line_no, static_cast<int>(start) + 1}});
    }
    return out;
}

std::optional<double> parse_real(const std::string& text) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
    return value;
}

struct SiteDecl {
    Token label;
    Token multiplier;
    double value = 0.0;
};

struct BondDecl {
    Token a, b, offset;
    bool inter = false;
};

struct ParityDecl {
    Token pair;
    std::string a, b;
    SourceLocation b_where;
};

class Parser {
public:
    LatticeDocument run(std::string_view text) {
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto end = text.find('\n', pos);
            const auto line = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
            ++line_no;
            last_line_ = line_no;
            last_column_ = static_cast<int>(line.size()) + 1;
            directive(tokenize(line, line_no));
            if (end == std::string_view::npos) break;
            pos = end + 1;
        }
        if (!header_) throw ParseError({1, 1}, "missing lattice header", {"lattice"});
        return finish();
    }

private:
    std::optional<Token> header_;
    SourceLocation header_where_;
    std::optional<Token> coupling_;
    double coupling_value_ = 1.0;
    std::optional<Token> profile_;
    ProfileKind profile_kind_ = ProfileKind::cell_periodic;
    std::vector<SiteDecl> sites_;
    std::vector<BondDecl> bonds_;
    std::vector<ParityDecl> parity_;
    int last_line_ = 0;
    int last_column_ = 1;

    [[noreturn]] void fail_end(const std::vector<Token>& toks, const std::string& what,
                               std::vector<std::string> expected) const {
        const auto& back = toks.back();
        SourceLocation at{back.where.line, back.where.column + static_cast<int>(back.text.size()) + 1};
        throw ParseError(at, what, std::move(expected));
    }

    void arity(const std::vector<Token>& toks, std::size_t wanted, std::vector<std::string> names) {
        if (toks.size() < wanted + 1) {
            fail_end(toks, "missing argument to '" + toks[0].text + "'", {names[toks.size() - 1]});
        }
        if (toks.size() > wanted + 1) {
            throw ParseError(toks[wanted + 1].where, "unexpected token '" + toks[wanted + 1].text + "'",
                             {"end of line"});
        }
    }

    static void check_label(const Token& t) {
        if (t.text.find(':') != std::string::npos) {
            throw ParseError(t.where, "site label may not contain ':'", {"<label>"});
        }
    }

    void directive(const std::vector<Token>& toks) {
        if (toks.empty()) return;
        const auto& head = toks[0];
        if (!header_) {
            if (head.text != "lattice") {
                throw ParseError(head.where, "expected lattice header, found '" + head.text + "'",
                                 {"lattice"});
            }
            arity(toks, 1, {"<name>"});
            header_ = toks[1];
            header_where_ = head.where;
            return;
        }
        if (head.text == "lattice") {
            throw ParseError(head.where, "duplicate lattice header");
        } else if (head.text == "coupling") {
            if (coupling_) throw ParseError(head.where, "duplicate coupling directive");
            arity(toks, 1, {"<positive real>"});
            auto v = parse_real(toks[1].text);
            if (!v) throw ParseError(toks[1].where, "invalid number '" + toks[1].text + "'", {"<positive real>"});
            if (!(*v > 0.0)) throw ParseError(toks[1].where, "coupling must be > 0", {"<positive real>"});
            coupling_ = toks[1];
            coupling_value_ = *v;
        } else if (head.text == "site") {
            arity(toks, 2, {"<label>", "<real multiplier>"});
            check_label(toks[1]);
            auto v = parse_real(toks[2].text);
            if (!v) throw ParseError(toks[2].where, "invalid number '" + toks[2].text + "'", {"<real multiplier>"});
            for (const auto& s : sites_) {
                if (s.label.text == toks[1].text) {
                    throw ParseError(toks[1].where, "duplicate site '" + toks[1].text + "' (first declared at " +
                                                        std::to_string(s.label.where.line) + ":" +
                                                        std::to_string(s.label.where.column) + ")");
                }
            }
            sites_.push_back({toks[1], toks[2], *v});
        } else if (head.text == "bond") {
            arity(toks, 3, {"<label>", "<label>", "<offset>"});
            check_label(toks[1]);
            check_label(toks[2]);
            const auto& off = toks[3].text;
            bool inter = false;
            if (off == "+1" || off == "1") {
                inter = true;
            } else if (off != "0") {
                throw ParseError(toks[3].where, "invalid bond offset '" + off + "'", {"0", "+1"});
            }
            bonds_.push_back({toks[1], toks[2], toks[3], inter});
        } else if (head.text == "parity") {
            if (toks.size() < 2) fail_end(toks, "parity needs at least one pair", {"<label>:<label>"});
            for (std::size_t i = 1; i < toks.size(); ++i) {
                const auto& t = toks[i].text;
                const auto colon = t.find(':');
                if (colon == std::string::npos || colon == 0 || colon + 1 == t.size() ||
                    t.find(':', colon + 1) != std::string::npos) {
                    throw ParseError(toks[i].where, "malformed parity pair '" + t + "'", {"<label>:<label>"});
                }
                parity_.push_back({toks[i], t.substr(0, colon), t.substr(colon + 1),
                                   {toks[i].where.line, toks[i].where.column + static_cast<int>(colon) + 1}});
            }
        } else if (head.text == "profile") {
            if (profile_) throw ParseError(head.where, "duplicate profile directive");
            arity(toks, 1, {"cell-periodic|longitudinal-split"});
            if (toks[1].text == "cell-periodic") {
                profile_kind_ = ProfileKind::cell_periodic;
            } else if (toks[1].text == "longitudinal-split") {
                profile_kind_ = ProfileKind::longitudinal_split;
            } else {
                throw ParseError(toks[1].where, "unknown profile '" + toks[1].text + "'",
                                 {"cell-periodic", "longitudinal-split"});
            }
            profile_ = toks[1];
        } else {
            throw ParseError(head.where, "unknown directive '" + head.text + "'",
                             {"coupling", "site", "bond", "parity", "profile"});
        }
    }

    const SiteDecl* find_site(const std::string& label) const {
        for (const auto& s : sites_) {
            if (s.label.text == label) return &s;
        }
        return nullptr;
    }

    LatticeDocument finish() {
        LatticeDocument doc;
        doc.spans.push_back({"lattice " + header_->text, header_where_});
        doc.cell.name = header_->text;
        doc.cell.coupling = coupling_value_;
        if (coupling_) doc.spans.push_back({"coupling", coupling_->where});
        if (profile_) doc.spans.push_back({"profile", profile_->where});
        if (sites_.empty()) {
            throw ParseError({last_line_, last_column_}, "lattice declares no sites", {"site"});
        }
        for (const auto& s : sites_) {
            doc.cell.sites.push_back(s.label.text);
            doc.spans.push_back({"site " + s.label.text, s.label.where});
        }

        std::set<std::pair<std::string, std::string>> seen_intra, seen_inter;
        for (const auto& b : bonds_) {
            for (const auto* t : {&b.a, &b.b}) {
                if (!find_site(t->text)) {
                    throw ParseError(t->where, "bond references undeclared site '" + t->text + "'");
                }
            }
            if (b.inter) {
                if (!seen_inter.insert({b.a.text, b.b.text}).second) {
                    throw ParseError(b.a.where, "duplicate bond " + b.a.text + " " + b.b.text + " +1");
                }
                doc.cell.inter_bonds.push_back({b.a.text, b.b.text});
            } else {
                if (b.a.text == b.b.text) throw ParseError(b.a.where, "self-bond on site '" + b.a.text + "'");
                auto key = std::minmax(b.a.text, b.b.text);
                if (!seen_intra.insert({key.first, key.second}).second) {
                    throw ParseError(b.a.where, "duplicate bond " + b.a.text + " " + b.b.text + " 0");
                }
                doc.cell.intra_bonds.push_back({b.a.text, b.b.text});
            }
            doc.spans.push_back({"bond " + b.a.text + " " + b.b.text + " " + b.offset.text, b.a.where});
        }
        try {
            validate(doc.cell);
        } catch (const InvalidArgument& e) {
            throw ParseError(header_->where, e.what());
        }

        doc.profile.kind = profile_kind_;
        if (profile_kind_ == ProfileKind::cell_periodic) {
            std::map<std::string, std::string> parity;
            for (const auto& p : parity_) {
                if (!find_site(p.a)) throw ParseError(p.pair.where, "parity references undeclared site '" + p.a + "'");
                if (!find_site(p.b)) throw ParseError(p.b_where, "parity references undeclared site '" + p.b + "'");
                for (const auto& [from, to] : {std::pair{p.a, p.b}, std::pair{p.b, p.a}}) {
                    auto [it, fresh] = parity.emplace(from, to);
                    if (!fresh && it->second != to) {
                        throw ParseError(p.pair.where, "parity is not an involution: '" + from +
                                                           "' maps to both '" + it->second + "' and '" + to + "'");
                    }
                }
                doc.spans.push_back({"parity " + p.pair.text, p.pair.where});
            }
            for (const auto& [from, to] : parity) {
                if (from != to) doc.profile.parity[from] = to;
            }
            for (const auto& s : sites_) doc.profile.multipliers[s.label.text] = s.value;
            for (const auto& s : sites_) {
                const auto& image = doc.profile.partner(s.label.text);
                if (image == s.label.text && s.value != 0.0) {
                    throw ParseError(s.multiplier.where, "parity fixed point requires multiplier 0 (site '" +
                                                             s.label.text + "')");
                }
                if (doc.profile.multiplier(image) != -s.value) {
                    throw ParseError(s.multiplier.where, "multiplier of '" + s.label.text +
                                                             "' is not odd under parity (partner '" + image +
                                                             "' has " + format_real(doc.profile.multiplier(image)) + ")");
                }
            }
            validate(doc.profile, doc.cell);
        }
        return doc;
    }
};

} // namespace

ParseError::ParseError(SourceLocation where, std::string message, std::vector<std::string> expected)
    : InvalidArgument(format_message(where, message, expected)),
      where_(where),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

bool equivalent(const LatticeDocument& lhs, const LatticeDocument& rhs) {
    return equivalent(lhs.cell, rhs.cell) && equivalent(lhs.profile, rhs.profile, lhs.cell);
}

LatticeDocument parse_lattice(std::string_view text) { return Parser{}.run(text); }

LatticeDocument load_lattice_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open lattice file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_lattice(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(e.where(), path.filename().string() + ": " + e.message(), e.expected());
    }
}

std::string serialize(const LatticeDocument& doc) {
    const auto cell = canonicalized(doc.cell);
    const bool split = doc.profile.kind == ProfileKind::longitudinal_split;
    std::ostringstream os;
    os << "lattice " << cell.name << '\n';
    os << "coupling " << format_real(cell.coupling) << '\n';
    os << "profile " << to_string(doc.profile.kind) << '\n';
    for (const auto& s : cell.sites) {
        os << "site " << s << ' ' << format_real(split ? 0.0 : doc.profile.multiplier(s)) << '\n';
    }
    for (const auto& b : cell.intra_bonds) os << "bond " << b.a << ' ' << b.b << " 0\n";
    for (const auto& b : cell.inter_bonds) os << "bond " << b.a << ' ' << b.b << " +1\n";
    if (!split) {
        std::string pairs;
        for (const auto& s : cell.sites) {
            const auto& image = doc.profile.partner(s);
            if (image != s && cell.require_index(s) < cell.require_index(image)) {
                pairs += ' ' + s + ':' + image;
            }
        }
        if (!pairs.empty()) os << "parity" << pairs << '\n';
    }
    return os.str();
}

LatticeDocument builtin_document(LatticeKind kind) {
    return {build_unit_cell(kind), build_gain_loss_profile(kind), {}};
}

ResolvedLattice resolve_lattice(const std::string& name_or_path) {
    if (auto kind = lattice_kind_from_string(name_or_path)) {
        return {builtin_document(*kind), kind};
    }
    if (!std::filesystem::exists(name_or_path)) {
        throw InvalidArgument("unknown lattice '" + name_or_path +
                              "' (expected lieb, kagome, stub or a .lat file)");
    }
    ResolvedLattice out{load_lattice_file(name_or_path), std::nullopt};
    for (auto kind : {LatticeKind::lieb, LatticeKind::kagome, LatticeKind::stub}) {
        if (equivalent(out.doc, builtin_document(kind))) out.builtin = kind;
    }
    return out;
}

} // namespace ptflat
