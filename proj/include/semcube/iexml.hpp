#pragma once

// IeXML annotated documents. Only <e>, <w> and <s> are interpreted; every
// other tag and all non-entity text is skipped.
//
//   <e id="SRC:CUI:T1[,T2...][::w1,w2...][|SRC:CUI:...]"> ... </e>
//
// Alternates joined by '|' are separate readings of one mention. A trailing
// "::" list restricts the reading to nested <w id="n"> words.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace semcube::iexml {

struct Reading {
  std::string source;
  std::string cui;
  std::vector<std::string> semtypes;
  std::optional<std::vector<std::uint32_t>> word_ids;

  friend bool operator==(const Reading&, const Reading&) = default;
};

// Mention content is kept as segments so the canonical serializer can
// reproduce surface text exactly. A segment with a word id was a <w>.
struct Segment {
  std::optional<std::uint32_t> word_id;
  std::string text;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct EntityMention {
  std::size_t sentence_index = 0;
  std::string surface;
  std::vector<Reading> readings;
  std::vector<Segment> segments;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct AnnotatedDocument {
  std::string doc_id;
  std::string object_type;
  std::size_t sentence_count = 0;
  std::vector<EntityMention> mentions;
  std::map<std::string, std::size_t> frequencies;

  std::size_t reading_count() const;
  friend bool operator==(const AnnotatedDocument&, const AnnotatedDocument&) = default;
};

// Throws Error(invalid_input) with context "<doc_id>@<byte offset>" on a
// malformed id, a reference to a missing <w>, or unbalanced tags.
AnnotatedDocument parse_iexml(std::string doc_id, std::string object_type, std::string_view text);

// Parses one id attribute value into its readings.
std::vector<Reading> parse_reading_ids(std::string_view id_attr);

// Unordered pairs (first < second) of distinct cuis sharing a sentence.
std::set<std::pair<std::string, std::string>> sentence_cooccurrences(const AnnotatedDocument& doc);

// Readings per cui; equal to doc.frequencies.
std::map<std::string, std::size_t> concept_frequencies(const AnnotatedDocument& doc);

// Canonical markup: one <s>...</s> per sentence, mentions separated by a space.
std::string to_iexml(const AnnotatedDocument& doc);

}  // namespace semcube::iexml
