#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kfp/field.hpp"
#include "kfp/filter_model.hpp"
#include "kfp/io.hpp"

namespace kfp::cli {

/// One real axis of a parameter slice: the real or imaginary part of one
/// coordinate swept over `count` evenly spaced values in [start, stop].
struct GridAxis {
  std::size_t coordinate = 0;
  bool imaginary = false;
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 0;
  std::string label;
};

/// Parses "name=start:stop:count[,name=start:stop:count]" where name is a
/// coordinate name of `model` ("d", "pole[0]", "root[1]", ...) optionally
/// suffixed with ".im". At most two axes.
std::vector<GridAxis> parse_grid(const std::string& spec, const FilterModel& model);

/// CSV with one column per axis, then value and laplacian. Throws
/// DomainError naming the first node that leaves the valid domain.
std::string emit_scan(const FilterModel& model, const ScalarField& field,
                      const std::vector<GridAxis>& axes, const io::KeyValues& provenance = {});

/// Entry point of the `kfp` tool. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kfp::cli
