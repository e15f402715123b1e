#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace mvrl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Named dense parameter. Vectors are stored as n-by-1 matrices; checkpoint
// serialization flattens values in row-major order.
struct Tensor {
  std::string name;
  Mat value;
};

// Writes parameters as a single text document: a format-version header, then
// one shape line and one value line per tensor. Values are hexadecimal floats
// so the round-trip is bit-exact. Throws on non-finite values or on names
// containing whitespace.
void save_checkpoint(const std::string& path, const std::vector<const Tensor*>& params);

std::map<std::string, Mat> load_checkpoint(const std::string& path);

// Assigns loaded matrices into the given tensors by name. Throws when a name
// is missing, a shape mismatches, or loaded entries are left unused.
void assign_checkpoint(const std::map<std::string, Mat>& loaded, const std::vector<Tensor*>& params);

}  // namespace mvrl
