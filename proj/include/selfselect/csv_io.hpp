#pragma once

#include "selfselect/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace selfselect::csv {

/// Doubles are written with 17 significant digits so reading them back is exact.
std::string format_double(double v);

/// Header `x1,...,xd,y,jstar`; jstar is 1-based.
void write_known(std::ostream& out, const KnownIndexDataset& data);
void write_known(const std::filesystem::path& path, const KnownIndexDataset& data);
KnownIndexDataset read_known(std::istream& in, double sigma = 1.0);
KnownIndexDataset read_known(const std::filesystem::path& path, double sigma = 1.0);

/// Header `x1,...,xd,y`.
void write_unknown(std::ostream& out, const UnknownIndexDataset& data);
void write_unknown(const std::filesystem::path& path, const UnknownIndexDataset& data);
UnknownIndexDataset read_unknown(std::istream& in);
UnknownIndexDataset read_unknown(const std::filesystem::path& path);

/// Weight matrix as one row per model: `w1,...,wd`.
void write_weights(const std::filesystem::path& path, const MatrixXd& columns);
MatrixXd read_weights(const std::filesystem::path& path);

}  // namespace selfselect::csv
