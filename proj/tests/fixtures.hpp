#pragma once

#include <memory>
#include <string>

#include "equisparse/penalty.hpp"
#include "equisparse/tree.hpp"

namespace fixtures {

// Seven features under four internal nodes: b11 is the root, b9 holds {1,2,3}
// with children b1 and b8 = {2,3}, b10 = {4,5}; b6 and b7 hang off the root.
inline const std::string fig1a_tsv =
    "# node\tparent\tleaf_col\n"
    "b11\t-\t-\n"
    "b9\tb11\t-\n"
    "b1\tb9\t0\n"
    "b8\tb9\t-\n"
    "b2\tb8\t1\n"
    "b3\tb8\t2\n"
    "b10\tb11\t-\n"
    "b4\tb10\t3\n"
    "b5\tb10\t4\n"
    "b6\tb11\t5\n"
    "b7\tb11\t6\n";

inline std::shared_ptr<const equisparse::Tree> fig1a() {
    return std::make_shared<const equisparse::Tree>(equisparse::parse_tree(fig1a_tsv, 7));
}

inline equisparse::PenaltySpec fig1a_spec() { return equisparse::PenaltySpec(fig1a()); }

}  // namespace fixtures
