//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_CHEM_H_
#define MOLGNN_CHEM_H_

#include <string>
#include <string_view>
#include <vector>

#include "molgnn/dataset.h"
#include "molgnn/graph.h"

namespace molgnn {

struct ElementInfo {
  std::string symbol;
  double weight; // daltons
  std::vector<int> valences; // ascending; neutral atoms only
};

// Throws DataError for elements outside the combined QM9/ZINC tables.
const ElementInfo &element_info(std::string_view symbol);
const ElementInfo &element_info(const DatasetSpec &spec, int vertex_type);

// single 1, double 2, triple 3, aromatic 1.5
double bond_order(int edge_type);

// Hydrogens needed to bring an atom with the given bond-order sum to its
// smallest feasible valence. Aromatic atoms whose sum overshoots the default
// valence snap down to the largest allowed valence within 1.5.
int implicit_hydrogens(const ElementInfo &element, double order_sum,
                       bool aromatic);

struct ValenceViolation {
  int vertex;
  std::string reason;
};

struct ValenceReport {
  bool valid = true;
  std::vector<ValenceViolation> violations;
};

/**
 * Valence-rule validity oracle.
 *
 * With explicit hydrogens (QM9) every atom's bond-order sum must equal one of
 * its allowed valences. With implicit hydrogens (ZINC) the sum, counting
 * aromatic bonds as 1.5, must lie within 0.5 of an integer no larger than the
 * maximum allowed valence, and every aromatic bond must lie on a cycle of
 * aromatic bonds.
 */
ValenceReport check_valence(const MolecularGraph &g, const DatasetSpec &spec);

// Sum of atomic weights. Implicit-hydrogen modes add 1.008 per hydrogen
// needed to complete each vertex to its smallest feasible valence; aromatic
// systems take the Kekule assignment with the fewest hydrogens, so a ring
// nitrogen left without a double bond counts one hydrogen as in pyrrole.
double molecular_weight(const MolecularGraph &g, const DatasetSpec &spec);

} // namespace molgnn

#endif // MOLGNN_CHEM_H_
