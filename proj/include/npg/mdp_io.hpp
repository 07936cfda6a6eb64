#pragma once

#include <iosfwd>
#include <string>

#include "npg/mdp.hpp"

namespace npg {

// Text format for MDP definitions:
//
//   [mdp]
//   n_states = 3
//   n_actions = 2
//   gamma = 0.9
//   q_max = 1.0          # optional, defaults to max |r|
//   [reward]             # S*A numbers, row-major over (s, a)
//   0.0 1.0  0.5 0.25  0.0 0.0
//   [transition]         # S*A*S numbers, row-major over (s, a, s')
//   ...
//   [init_dist]          # S numbers
//   1.0 0.0 0.0
//
// Whitespace and line breaks inside number lists are free-form; '#' starts
// a comment. load_mdp validates the result before returning.
TabularMdp load_mdp(std::istream& in);
TabularMdp load_mdp_file(const std::string& path);
void save_mdp(const TabularMdp& mdp, std::ostream& out);
void save_mdp_file(const TabularMdp& mdp, const std::string& path);

}  // namespace npg
