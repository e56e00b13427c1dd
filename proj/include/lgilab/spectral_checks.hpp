#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lgilab/spectra.hpp"

namespace lgilab {

struct SpectralCheckRow {
  std::string check;
  long trial = 0;
  SpectralReport report;
};

struct SpectralCheckSummary {
  std::string check;
  long trials = 0;
  long passed = 0;
  std::vector<SpectralCheckRow> rows;
};

struct SpectralCheckOptions {
  Index n = 20;
  Index d = 64;
  long trials = 100;
  std::uint64_t seed = 0;
  double delta = 0.1;  // klin confidence level
};

// Named checks: "lemma-d8" (NTK smallest eigenvalue vs a quarter of the
// Gram smallest eigenvalue), "eig-subadditivity" (eigenvalue subadditivity),
// "rbf-sandwich" (Gaussian RBF eigenvalues on grids between the two
// separation-distance bounds), "eig-transfer", "klin" (inner-product
// kernel vs its linearization; statistical).
SpectralCheckSummary run_spectral_check(const std::string& check, const SpectralCheckOptions& options);

std::vector<std::string> spectral_check_names();

// JSON array of rows for a set of summaries.
std::string spectral_summaries_json(const std::vector<SpectralCheckSummary>& summaries);

// Evenly spaced grid with spacing 2 sd: `per_axis` points on a line
// (dim 1) or per_axis^2 points on a square lattice (dim 2).
Matrix spaced_grid(int dim, Index per_axis, double sd);

// Random data set with rows on the unit sphere.
Matrix unit_rows(Index n, Index d, std::uint64_t seed);

}  // namespace lgilab
