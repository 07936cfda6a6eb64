#include "npg/mdp_io.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace npg {

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

TabularMdp load_mdp(std::istream& in) {
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<double>> lists;
  std::string section;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = strip(line.substr(1, line.size() - 2));
      continue;
    }
    if (section == "mdp") {
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("mdp file: expected key = value in [mdp]: " + line);
      scalars[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
    } else if (!section.empty()) {
      std::istringstream nums(line);
      double x;
      while (nums >> x) lists[section].push_back(x);
      if (!nums.eof())
        throw std::invalid_argument("mdp file: non-numeric data in [" + section + "]: " + line);
    } else {
      throw std::invalid_argument("mdp file: data before any section header: " + line);
    }
  }

  auto need = [&](const char* key) {
    auto it = scalars.find(key);
    if (it == scalars.end())
      throw std::invalid_argument(std::string("mdp file: missing [mdp] key ") + key);
    return it->second;
  };

  TabularMdp mdp;
  mdp.n_states = std::stoi(need("n_states"));
  mdp.n_actions = std::stoi(need("n_actions"));
  mdp.discount = std::stod(need("gamma"));

  auto take = [&](const char* key, long expected) {
    auto it = lists.find(key);
    if (it == lists.end())
      throw std::invalid_argument(std::string("mdp file: missing section [") + key + "]");
    if (static_cast<long>(it->second.size()) != expected) {
      std::ostringstream msg;
      msg << "mdp file: [" << key << "] has " << it->second.size() << " numbers, expected "
          << expected;
      throw std::invalid_argument(msg.str());
    }
    return it->second;
  };

  const int s_count = mdp.n_states, a_count = mdp.n_actions;
  const auto r = take("reward", static_cast<long>(s_count) * a_count);
  mdp.reward.resize(s_count, a_count);
  for (int s = 0; s < s_count; ++s)
    for (int a = 0; a < a_count; ++a) mdp.reward(s, a) = r[s * a_count + a];

  const auto t = take("transition", static_cast<long>(s_count) * a_count * s_count);
  mdp.transition.resize(s_count * a_count, s_count);
  for (int p = 0; p < s_count * a_count; ++p)
    for (int s2 = 0; s2 < s_count; ++s2) mdp.transition(p, s2) = t[p * s_count + s2];

  const auto z = take("init_dist", s_count);
  mdp.init_dist.resize(s_count);
  for (int s = 0; s < s_count; ++s) mdp.init_dist[s] = z[s];

  if (scalars.count("q_max"))
    mdp.q_max = std::stod(scalars["q_max"]);
  else
    mdp.q_max = std::max(mdp.reward.cwiseAbs().maxCoeff(), 1e-12);

  mdp.validate();
  return mdp;
}

TabularMdp load_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open MDP file: " + path);
  return load_mdp(in);
}

void save_mdp(const TabularMdp& mdp, std::ostream& out) {
  out << std::setprecision(17);
  out << "[mdp]\n";
  out << "n_states = " << mdp.n_states << "\n";
  out << "n_actions = " << mdp.n_actions << "\n";
  out << "gamma = " << mdp.discount << "\n";
  out << "q_max = " << mdp.q_max << "\n";
  out << "[reward]\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) out << mdp.reward(s, a) << (a + 1 < mdp.n_actions ? " " : "\n");
  }
  out << "[transition]\n";
  for (int p = 0; p < mdp.n_pairs(); ++p) {
    for (int s2 = 0; s2 < mdp.n_states; ++s2)
      out << mdp.transition(p, s2) << (s2 + 1 < mdp.n_states ? " " : "\n");
  }
  out << "[init_dist]\n";
  for (int s = 0; s < mdp.n_states; ++s)
    out << mdp.init_dist[s] << (s + 1 < mdp.n_states ? " " : "\n");
}

void save_mdp_file(const TabularMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write MDP file: " + path);
  save_mdp(mdp, out);
}

}  // namespace npg
