#pragma once
#include <string>

#include "dataset.h"

namespace profit {

struct IngestOptions {
  char delimiter = ',';
  // Columns beyond subject_id,t,s,y are treated as subject-level
  // covariates unless listed here.
  std::vector<std::string> ignore_columns;
};

// Long-format CSV (header row: subject_id,t,s,y[,covariates...]).
// Both axes are affinely rescaled to [0,1]; the rescale parameters and a
// content hash of the source file land in the metadata. Subjects keep
// their order of first appearance; visits are sorted by time.
LongitudinalFunctionalDataset load_csv(const std::string& path, const IngestOptions& opt = {});

// Long-format CSV with round-trip precision (17 significant digits).
void save_csv(const LongitudinalFunctionalDataset& ds, const std::string& path);

// Self-describing JSON container (grid, subjects, metadata).
void save_json(const LongitudinalFunctionalDataset& ds, const std::string& path);
LongitudinalFunctionalDataset load_json(const std::string& path);

}  // namespace profit
