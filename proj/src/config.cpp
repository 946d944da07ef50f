#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "abplab/errors.hpp"
#include "abplab/suites.hpp"

namespace abplab {

namespace {

using Section = std::map<std::string, std::string>;

const std::map<std::string, Section>& defaults() {
  static const std::map<std::string, Section> d = {
      {"run",
       {{"suites",
         "ops, hyperbolic, central, dirichlet, ellipticity, tame, majorize, maclaurin, coeffcond, "
         "alexandrov, pipeline, oscillation, solve"},
        {"seed", "1"},
        {"output_dir", "out"},
        {"parallel", "false"}}},
      {"ops",
       {{"operators",
         "det:n=2; det:n=3; sigma:k=2,n=3; pfold:p=2,n=3; trace:n=3; normsqdet:n=2; "
         "prod(det:n=2,sigma:k=1,n=2); rderiv(det:n=3,l=1)"}}},
      {"hyperbolic",
       {{"operators", "det:n=3; sigma:k=2,n=4; pfold:p=2,n=3; prod(det:n=2,sigma:k=1,n=2); "
                      "rderiv(det:n=4,l=2)"},
        {"samples", "300"}}},
      {"central",
       {{"operators", "det:n=2; det:n=3; sigma:k=2,n=3; pfold:p=2,n=4; normsqdet:n=2; normsqdet:n=3"},
        {"tol", "1e-6"}}},
      {"dirichlet",
       {{"operators", "det:n=3; sigma:k=2,n=3; pfold:p=2,n=3; rderiv(det:n=3,l=1)"},
        {"samples", "200"}}},
      {"ellipticity",
       {{"operators", "det:n=3; sigma:k=2,n=3; pfold:p=2,n=3; rderiv(det:n=3,l=1)"},
        {"samples", "200"}}},
      {"tame",
       {{"operators", "det:n=3; sigma:k=2,n=3; pfold:p=2,n=3; rderiv(det:n=3,l=1)"},
        {"samples", "200"}}},
      {"majorize",
       {{"operators", "det:n=2; det:n=3; det:n=4; det:n=5"},
        {"samples", "10000"},
        {"hunt", "false"},
        {"hunt_starts", "10"},
        {"hunt_iterations", "200"}}},
      {"maclaurin", {{"dims", "2; 3; 4; 5"}, {"samples", "2000"}}},
      {"coeffcond", {{"operators", "normsqdet:n=2; normsqdet:n=3"}, {"num_tau", "100"}}},
      {"alexandrov", {{"shapes", "65; 129"}}},
      {"pipeline", {{"shape", "65"}, {"eta", "0.05"}, {"tol_constant", "5"}}},
      {"oscillation", {{"shape", "65"}, {"disk_shape", "129"}}},
      {"solve",
       {{"operator", "det:n=2"},
        {"f", "const:1"},
        {"boundary", "poly:0,0.5"},
        {"box", "0, 0, 1, 1"},
        {"shape", "65"},
        {"tol", "1e-10"},
        {"max_iter", "20000"},
        {"experimental", "false"},
        {"grid_out", "solve_grid.csv"}}},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& what) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(what + ": expected true or false, got '" + v + "'");
}

std::uint64_t parse_seed(const std::string& v, const std::string& what) {
  std::size_t used = 0;
  unsigned long long s = 0;
  try {
    s = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || v[0] == '-')
    throw ConfigError(what + ": expected a non-negative integer, got '" + v + "'");
  return s;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "ops",       "hyperbolic", "central",   "dirichlet",  "ellipticity", "tame",  "majorize",
      "maclaurin", "coeffcond",  "alexandrov", "pipeline", "oscillation", "solve"};
  return names;
}

const std::string& RunConfig::get(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  if (s == sections.end()) throw ConfigError("no section [" + section + "]");
  auto k = s->second.find(key);
  if (k == s->second.end()) throw ConfigError("no key " + key + " in [" + section + "]");
  return k->second;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, keys] : sections) j[name] = keys;
  j["run"]["seed"] = std::to_string(seed);
  return j;
}

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  cfg.sections = defaults();
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty())
      throw ConfigError("config: key '" + name + "' outside a section");
    auto known = defaults().find(name);
    if (known == defaults().end()) throw ConfigError("config: unknown section [" + name + "]");
    for (const auto& [key, value] : section) {
      if (!known->second.count(key))
        throw ConfigError("config: unknown key '" + key + "' in [" + name + "]");
      cfg.sections[name][key] = trim(value.data());
    }
  }

  std::string list = cfg.get("run", "suites");
  std::replace(list.begin(), list.end(), ',', ';');
  std::istringstream ls(list);
  std::string item;
  std::set<std::string> seen;
  while (std::getline(ls, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    if (std::find(suite_names().begin(), suite_names().end(), item) == suite_names().end())
      throw ConfigError("config: unknown suite '" + item + "'");
    if (seen.insert(item).second) cfg.suites.push_back(item);
  }
  if (cfg.suites.empty()) throw ConfigError("config: the suite list is empty");

  cfg.seed = parse_seed(cfg.get("run", "seed"), "run.seed");
  if (const char* env = std::getenv("ABPLAB_SEED"); env && *env) {
    cfg.seed = parse_seed(env, "ABPLAB_SEED");
  }
  cfg.output_dir = cfg.get("run", "output_dir");
  cfg.parallel = parse_bool(cfg.get("run", "parallel"), "run.parallel");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::string default_config_text() {
  std::ostringstream os;
  for (const auto& [name, keys] : defaults()) {
    os << '[' << name << "]\n";
    for (const auto& [k, v] : keys) os << k << " = " << v << '\n';
    os << '\n';
  }
  return os.str();
}

}  // namespace abplab
