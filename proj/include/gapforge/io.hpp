#pragma once

#include <string>

#include "gapforge/canonical.hpp"
#include "gapforge/facial.hpp"
#include "gapforge/generators.hpp"
#include "gapforge/instance.hpp"

namespace gapforge {

// Instance file format v1: dense symmetric arrays with scalars stored as
// decimal integers or "p/q" strings; load(save(x)) is bit-exact on the
// textual forms.
void save_instance(const ExactInstance& inst, const std::string& path);
ExactInstance load_instance(const std::string& path);

std::string instance_to_json(const ExactInstance& inst);
ExactInstance instance_from_json(const std::string& text, const std::string& where = "<string>");

// SeDuMi-style triple as plain text: <prefix>.A.txt holds an m x n^2 matrix
// whose i-th row is A_i vectorized column-major, <prefix>.b.txt the primal
// objective, <prefix>.c.txt holds vec(B), <prefix>.K.txt the cone ("s n").
// A small loader script is dropped next to the files once per directory.
void export_sedumi(const ExactInstance& inst, const std::string& prefix);
ExactInstance import_sedumi(const std::string& prefix);

// SDPA sparse format (one psd block). The file encodes
//   min (-c)^T x  s.t.  sum x_i (-A_i) - (-B) >= 0,
// so the reported optimal value is -val(P).
void export_sdpa(const ExactInstance& inst, const std::string& path);

void save_manifest(const LibraryManifest& manifest, const std::string& path);
LibraryManifest load_manifest(const std::string& path);

std::string certificate_to_json(const ExactInstance& inst, const GapCertificate& cert);
std::string canonical_outcome_to_json(const CanonicalizeOutcome& outcome);

}  // namespace gapforge
