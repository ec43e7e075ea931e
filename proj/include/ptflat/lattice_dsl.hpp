#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptflat/error.hpp"
#include "ptflat/lattice.hpp"

namespace ptflat {

// Plain-text lattice definitions (.lat). Line oriented, '#' starts a comment:
//
//   lattice <name>                       required, first
//   coupling <positive real>             default 1
//   site <label> <real multiplier>       declaration order = matrix order
//   bond <label> <label> <0|+1>          +1: second site is in the next cell
//   parity <a>:<b> [<c>:<d> ...]         involution pairs; others are fixed
//   profile cell-periodic|longitudinal-split

struct SourceLocation {
    int line = 0;
    int column = 0;
};

struct SourceSpan {
    std::string declaration;  // e.g. "site b", "bond b p 0"
    SourceLocation where;
};

class ParseError : public InvalidArgument {
public:
    ParseError(SourceLocation where, std::string message, std::vector<std::string> expected = {});

    const SourceLocation& where() const { return where_; }
    const std::string& message() const { return message_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    SourceLocation where_;
    std::string message_;
    std::vector<std::string> expected_;
};

struct LatticeDocument {
    UnitCellSpec cell;
    GainLossProfile profile;
    std::vector<SourceSpan> spans;
};

/// Semantic equality (cell, profile, parity); spans are ignored.
bool equivalent(const LatticeDocument& lhs, const LatticeDocument& rhs);

LatticeDocument parse_lattice(std::string_view text);
LatticeDocument load_lattice_file(const std::filesystem::path& path);

/// Canonical text: header, coupling, profile, sites in declaration order,
/// sorted bonds, one parity line.
std::string serialize(const LatticeDocument& doc);

LatticeDocument builtin_document(LatticeKind kind);

struct ResolvedLattice {
    LatticeDocument doc;
    /// Set when the document is semantically one of the built-in lattices.
    std::optional<LatticeKind> builtin;
};

/// A built-in name ("lieb", "kagome", "stub") or a path to a .lat file.
ResolvedLattice resolve_lattice(const std::string& name_or_path);

} // namespace ptflat
