// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

namespace sdcons::io {

/// 17 significant digits, '.' separator, locale independent.
std::string format_number(double value);

/// Quoted JSON string literal.
std::string json_string(std::string_view text);

/// Row-major nested JSON array of a matrix.
std::string json_matrix(const Eigen::MatrixXd& m);

/// Flat JSON array of a vector.
std::string json_vector(const Eigen::VectorXd& v);

}  // namespace sdcons::io
