#pragma once

// Loading of crawl lists and scanner findings into validated domain values.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vchain/model.hpp"

namespace vchain {

/// Everything the scanners reported for one victim site.
struct FindingSet {
  std::string site;
  /// Recon facts true before any attack (server and language versions, ...).
  std::vector<Condition> environment_facts;
  std::vector<Finding> findings;

  friend bool operator==(const FindingSet& a, const FindingSet& b) {
    if (a.site != b.site || a.findings != b.findings) return false;
    if (a.environment_facts.size() != b.environment_facts.size()) return false;
    for (std::size_t i = 0; i < a.environment_facts.size(); ++i) {
      if (a.environment_facts[i].label != b.environment_facts[i].label) return false;
    }
    return true;
  }
};

/// Canonical URI -> findings on that URI, in input order.
struct UriVulnerabilityMap {
  std::map<std::string, std::vector<Finding>> entries;

  std::size_t finding_count() const;
};

/// Newline-separated URIs; blank lines and '#' comments are skipped and
/// duplicates collapse. Throws MalformedUri (with the 1-based line number) or
/// SchemaViolation for non-UTF-8 input.
UriTree parse_crawl_list(std::string_view document);

/// Parses the JSON findings document. Warnings (unsatisfiable preconditions,
/// near-miss condition labels) are appended to `warnings` when given.
FindingSet parse_findings(std::string_view document, std::vector<std::string>* warnings = nullptr);

/// Tab-separated adapter: VULN, URI, PRE, POST, GOAL columns. PRE and POST
/// are ';'-joined; a '!' prefix marks a user-action precondition and a '?'
/// prefix marks a false-positive postcondition. A header row starting with
/// "VULN" and '#' comment lines are skipped.
FindingSet parse_findings_tsv(std::string_view document, std::string site = {},
                              std::vector<std::string>* warnings = nullptr);

/// Canonical JSON text of a finding set; parse_findings reads it back to an
/// equal value.
std::string serialize_findings(const FindingSet& set);

/// Checks set-level invariants. Throws DuplicateState for a repeated
/// (vulnerability, URI) pair.
void validate_finding_set(const FindingSet& set);

/// Deterministic lint over a valid set: preconditions that nothing can
/// satisfy, and distinct condition ids that only differ by punctuation.
std::vector<std::string> lint_findings(const FindingSet& set);

/// Groups findings by canonical URI. Findings whose URI is not a crawled
/// resource are kept and reported in `warnings` ("*" is exempt).
UriVulnerabilityMap map_findings_to_uris(const FindingSet& findings, const UriTree& tree,
                                         std::vector<std::string>* warnings = nullptr);

}  // namespace vchain
