#include "mvrl/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mvrl {

namespace {

constexpr const char* kMagic = "mvrl-checkpoint";
constexpr int kVersion = 1;

std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<const Tensor*>& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << kMagic << "\n";
  out << "version " << kVersion << "\n";
  std::set<std::string> seen;
  for (const Tensor* t : params) {
    if (t->name.empty() || t->name.find_first_of(" \t\n") != std::string::npos)
      throw std::runtime_error("save_checkpoint: bad tensor name '" + t->name + "'");
    if (!seen.insert(t->name).second)
      throw std::runtime_error("save_checkpoint: duplicate tensor name '" + t->name + "'");
    if (!t->value.allFinite())
      throw std::runtime_error("save_checkpoint: non-finite values in '" + t->name + "'");
    out << "tensor " << t->name << " 2 " << t->value.rows() << " " << t->value.cols() << "\n";
    for (Eigen::Index r = 0; r < t->value.rows(); ++r)
      for (Eigen::Index c = 0; c < t->value.cols(); ++c)
        out << hex_double(t->value(r, c)) << (r + 1 == t->value.rows() && c + 1 == t->value.cols() ? "" : " ");
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::map<std::string, Mat> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  int version = -1;
  if (!std::getline(in, line)) throw std::runtime_error("load_checkpoint: missing version");
  {
    std::istringstream ls(line);
    std::string word;
    ls >> word >> version;
    if (word != "version" || version != kVersion)
      throw std::runtime_error("load_checkpoint: unsupported version line '" + line + "'");
  }
  std::map<std::string, Mat> result;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word, name;
    int rank = 0;
    ls >> word >> name >> rank;
    if (word != "tensor" || rank != 2)
      throw std::runtime_error("load_checkpoint: bad tensor line '" + line + "'");
    Eigen::Index rows = 0, cols = 0;
    ls >> rows >> cols;
    if (rows <= 0 || cols <= 0)
      throw std::runtime_error("load_checkpoint: bad shape for '" + name + "'");
    std::string values;
    if (!std::getline(in, values))
      throw std::runtime_error("load_checkpoint: missing values for '" + name + "'");
    Mat m(rows, cols);
    const char* p = values.c_str();
    char* end = nullptr;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        double v = std::strtod(p, &end);
        if (end == p)
          throw std::runtime_error("load_checkpoint: too few values for '" + name + "'");
        if (!std::isfinite(v))
          throw std::runtime_error("load_checkpoint: non-finite value in '" + name + "'");
        m(r, c) = v;
        p = end;
      }
    }
    while (*p == ' ') ++p;
    if (*p != '\0')
      throw std::runtime_error("load_checkpoint: trailing values for '" + name + "'");
    if (!result.emplace(name, std::move(m)).second)
      throw std::runtime_error("load_checkpoint: duplicate tensor '" + name + "'");
  }
  return result;
}

void assign_checkpoint(const std::map<std::string, Mat>& loaded, const std::vector<Tensor*>& params) {
  std::set<std::string> used;
  for (Tensor* t : params) {
    auto it = loaded.find(t->name);
    if (it == loaded.end())
      throw std::runtime_error("assign_checkpoint: missing tensor '" + t->name + "'");
    if (it->second.rows() != t->value.rows() || it->second.cols() != t->value.cols())
      throw std::runtime_error("assign_checkpoint: shape mismatch for '" + t->name + "'");
    t->value = it->second;
    used.insert(t->name);
  }
  for (const auto& [name, m] : loaded)
    if (!used.count(name))
      throw std::runtime_error("assign_checkpoint: unused tensor '" + name + "' in checkpoint");
}

}  // namespace mvrl
