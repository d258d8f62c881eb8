#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "selflearn/datamodel.hpp"

namespace selflearn {

/// Formats feature values in shortest round-trip form.
std::string format_real(double v);
double parse_real(const std::string& text);

/// Writes one split of every language, languages in id order.
///
/// Classification: `language<TAB>label<TAB>f1,...,fd` per example.
/// Tagging: one `language<TAB>tag<TAB>f1,...,fd` line per token, a blank line
/// after every sequence.
///
/// Items without visible labels are written with "?" unless
/// `reveal_hidden_gold` is set, in which case their fenced gold labels are
/// written (used by the generator so silver precision can be audited).
void write_split(std::ostream& os, const Pool& pool, Split split, bool reveal_hidden_gold = false);

/// Parses a split file into `pool`. Language names must already be
/// registered in the pool. Labels read for the unlabeled split go behind the
/// evaluation fence. Stable ids are assigned from `next_id` upward.
void read_split(std::istream& is, Pool& pool, Split split, std::int64_t& next_id);

/// Dataset directory: dataset.json manifest plus train/unlabeled/dev/test
/// files (.tsv for classification, .conll for tagging).
void write_dataset(const std::filesystem::path& dir, const Pool& pool);
Pool read_dataset(const std::filesystem::path& dir);

std::string split_file_name(Task task, Split split);

/// Renumbers stable ids in file order (split, then language, then position)
/// so that a pool read back from disk compares equal to the original.
void assign_canonical_ids(Pool& pool);

}  // namespace selflearn
