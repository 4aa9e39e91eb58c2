#include "semcube/iexml.hpp"

#include <algorithm>
#include <charconv>

#include "semcube/error.hpp"

namespace semcube::iexml {

namespace {

std::vector<std::string_view> split(std::string_view s, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + sep.size();
  }
}

std::optional<std::uint32_t> parse_natural(std::string_view s) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '&') {
      auto semi = s.find(';', i);
      if (semi != std::string_view::npos && semi - i <= 6) {
        auto name = s.substr(i + 1, semi - i - 1);
        const char* rep = nullptr;
        if (name == "amp") rep = "&";
        else if (name == "lt") rep = "<";
        else if (name == "gt") rep = ">";
        else if (name == "quot") rep = "\"";
        else if (name == "apos") rep = "'";
        if (rep) {
          out += rep;
          i = semi;
          continue;
        }
      }
    }
    out += s[i];
  }
  return out;
}

std::string escape(std::string_view s, bool attribute) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
          break;
        }
        [[fallthrough]];
      default: out += c;
    }
  }
  return out;
}

struct Tag {
  bool closing = false;
  bool self_closing = false;
  std::string name;
  std::string_view attrs;
};

Tag parse_tag(std::string_view body) {
  Tag t;
  if (!body.empty() && body.front() == '/') {
    t.closing = true;
    body.remove_prefix(1);
  }
  if (!body.empty() && body.back() == '/') {
    t.self_closing = true;
    body.remove_suffix(1);
  }
  std::size_t i = 0;
  while (i < body.size() && !is_space(body[i])) ++i;
  t.name = std::string(body.substr(0, i));
  std::transform(t.name.begin(), t.name.end(), t.name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  t.attrs = body.substr(i);
  return t;
}

std::optional<std::string> attribute(std::string_view attrs, std::string_view name) {
  std::size_t i = 0;
  while (i < attrs.size()) {
    while (i < attrs.size() && is_space(attrs[i])) ++i;
    auto key_start = i;
    while (i < attrs.size() && attrs[i] != '=' && !is_space(attrs[i])) ++i;
    auto key = attrs.substr(key_start, i - key_start);
    while (i < attrs.size() && is_space(attrs[i])) ++i;
    if (i >= attrs.size() || attrs[i] != '=') {
      if (key.empty()) break;
      continue;
    }
    ++i;
    while (i < attrs.size() && is_space(attrs[i])) ++i;
    if (i >= attrs.size()) break;
    char quote = attrs[i];
    std::string_view value;
    if (quote == '"' || quote == '\'') {
      auto end = attrs.find(quote, i + 1);
      if (end == std::string_view::npos) return std::nullopt;
      value = attrs.substr(i + 1, end - i - 1);
      i = end + 1;
    } else {
      auto start = i;
      while (i < attrs.size() && !is_space(attrs[i])) ++i;
      value = attrs.substr(start, i - start);
    }
    if (key == name) return decode_entities(value);
  }
  return std::nullopt;
}

}  // namespace

std::size_t AnnotatedDocument::reading_count() const {
  std::size_t n = 0;
  for (const auto& m : mentions) n += m.readings.size();
  return n;
}

std::vector<Reading> parse_reading_ids(std::string_view id_attr) {
  std::vector<Reading> out;
  for (auto alt : split(id_attr, "|")) {
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::invalid_input, "malformed reading id '" + std::string(alt) + "': " + why);
    };
    std::string_view head = alt;
    std::string_view words;
    bool has_words = false;
    if (auto pos = alt.find("::"); pos != std::string_view::npos) {
      head = alt.substr(0, pos);
      words = alt.substr(pos + 2);
      has_words = true;
    }
    auto parts = split(head, ":");
    if (parts.size() != 3) throw fail("expected SRC:CUI:TYPES");
    if (parts[0].empty() || parts[1].empty() || parts[2].empty()) throw fail("empty field");
    Reading r;
    r.source = std::string(parts[0]);
    r.cui = std::string(parts[1]);
    for (auto t : split(parts[2], ",")) {
      if (t.empty()) throw fail("empty semantic type");
      r.semtypes.emplace_back(t);
    }
    if (has_words) {
      std::vector<std::uint32_t> ids;
      for (auto w : split(words, ",")) {
        auto v = parse_natural(w);
        if (!v) throw fail("word id '" + std::string(w) + "' is not a natural number");
        ids.push_back(*v);
      }
      r.word_ids = std::move(ids);
    }
    out.push_back(std::move(r));
  }
  return out;
}

AnnotatedDocument parse_iexml(std::string doc_id, std::string object_type, std::string_view text) {
  AnnotatedDocument doc;
  doc.doc_id = std::move(doc_id);
  doc.object_type = std::move(object_type);

  auto error_at = [&](std::size_t offset, const std::string& what) {
    return Error(ErrorCode::invalid_input, what, doc.doc_id + "@" + std::to_string(offset));
  };

  std::size_t sentence = 0;
  bool content = false;  // anything seen since the last sentence boundary

  std::optional<EntityMention> mention;
  std::size_t mention_offset = 0;
  std::optional<std::uint32_t> word;
  std::size_t word_offset = 0;

  auto append_text = [&](std::string_view raw) {
    if (raw.empty()) return;
    if (std::any_of(raw.begin(), raw.end(), [](char c) { return !is_space(c); })) content = true;
    if (!mention) return;
    auto decoded = decode_entities(raw);
    auto& segs = mention->segments;
    if (word) {
      segs.back().text += decoded;
    } else if (!segs.empty() && !segs.back().word_id) {
      segs.back().text += decoded;
    } else {
      segs.push_back({std::nullopt, std::move(decoded)});
    }
  };

  std::size_t i = 0;
  while (i < text.size()) {
    auto lt = text.find('<', i);
    if (lt == std::string_view::npos) {
      append_text(text.substr(i));
      break;
    }
    append_text(text.substr(i, lt - i));
    if (text.substr(lt, 4) == "<!--") {
      auto end = text.find("-->", lt + 4);
      if (end == std::string_view::npos) throw error_at(lt, "unterminated comment");
      i = end + 3;
      continue;
    }
    auto gt = text.find('>', lt + 1);
    if (gt == std::string_view::npos) throw error_at(lt, "unterminated tag");
    i = gt + 1;
    auto body = text.substr(lt + 1, gt - lt - 1);
    if (!body.empty() && (body.front() == '?' || body.front() == '!')) continue;
    Tag tag = parse_tag(body);

    if (tag.name == "e") {
      if (tag.closing) {
        if (!mention) throw error_at(lt, "unbalanced </e>");
        if (word) throw error_at(lt, "</e> inside open <w>");
        for (const auto& r : mention->readings) {
          if (!r.word_ids) continue;
          for (auto w : *r.word_ids) {
            bool found = std::any_of(mention->segments.begin(), mention->segments.end(),
                                     [&](const Segment& s) { return s.word_id == w; });
            if (!found) {
              throw error_at(mention_offset, "reading " + r.cui + " references missing word " + std::to_string(w));
            }
          }
        }
        for (const auto& s : mention->segments) mention->surface += s.text;
        for (const auto& r : mention->readings) ++doc.frequencies[r.cui];
        doc.mentions.push_back(std::move(*mention));
        mention.reset();
        continue;
      }
      if (mention) throw error_at(lt, "nested <e> is not supported");
      auto id = attribute(tag.attrs, "id");
      if (!id) throw error_at(lt, "<e> without id attribute");
      EntityMention m;
      try {
        m.readings = parse_reading_ids(*id);
      } catch (const Error& e) {
        throw error_at(lt, e.message());
      }
      m.sentence_index = sentence;
      content = true;
      if (tag.self_closing) {
        for (const auto& r : m.readings) {
          if (r.word_ids) throw error_at(lt, "reading " + r.cui + " references words of an empty <e/>");
          ++doc.frequencies[r.cui];
        }
        doc.mentions.push_back(std::move(m));
        continue;
      }
      mention = std::move(m);
      mention_offset = lt;
    } else if (tag.name == "w") {
      if (!mention) continue;  // words outside entities carry no meaning
      if (tag.closing) {
        if (!word) throw error_at(lt, "unbalanced </w>");
        word.reset();
        continue;
      }
      if (word) throw error_at(lt, "nested <w>");
      auto id = attribute(tag.attrs, "id");
      auto v = id ? parse_natural(*id) : std::nullopt;
      if (!v) throw error_at(lt, "<w> needs a natural-number id");
      mention->segments.push_back({*v, {}});
      if (tag.self_closing) continue;
      word = *v;
      word_offset = lt;
    } else if (tag.name == "s") {
      if (mention) throw error_at(lt, "sentence boundary inside <e>");
      if (tag.closing || tag.self_closing) {
        ++sentence;
        content = false;
      } else if (content) {
        // trailing-delimiter style text followed by a wrapped sentence
        ++sentence;
        content = false;
      }
    }
  }
  if (word) throw error_at(word_offset, "unclosed <w>");
  if (mention) throw error_at(mention_offset, "unclosed <e>");
  doc.sentence_count = sentence + (content ? 1 : 0);
  return doc;
}

std::set<std::pair<std::string, std::string>> sentence_cooccurrences(const AnnotatedDocument& doc) {
  std::map<std::size_t, std::set<std::string>> by_sentence;
  for (const auto& m : doc.mentions) {
    for (const auto& r : m.readings) by_sentence[m.sentence_index].insert(r.cui);
  }
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [_, cuis] : by_sentence) {
    for (auto a = cuis.begin(); a != cuis.end(); ++a) {
      for (auto b = std::next(a); b != cuis.end(); ++b) out.emplace(*a, *b);
    }
  }
  return out;
}

std::map<std::string, std::size_t> concept_frequencies(const AnnotatedDocument& doc) {
  std::map<std::string, std::size_t> out;
  for (const auto& m : doc.mentions) {
    for (const auto& r : m.readings) ++out[r.cui];
  }
  return out;
}

std::string to_iexml(const AnnotatedDocument& doc) {
  std::string out;
  std::size_t next = 0;
  auto emit_sentence_end = [&] { out += "</s>"; };
  for (std::size_t s = 0; s < doc.sentence_count; ++s) {
    out += "<s>";
    bool first = true;
    while (next < doc.mentions.size() && doc.mentions[next].sentence_index == s) {
      const auto& m = doc.mentions[next++];
      if (!first) out += ' ';
      first = false;
      std::string id;
      for (std::size_t r = 0; r < m.readings.size(); ++r) {
        const auto& rd = m.readings[r];
        if (r) id += '|';
        id += rd.source + ':' + rd.cui + ':';
        for (std::size_t t = 0; t < rd.semtypes.size(); ++t) {
          if (t) id += ',';
          id += rd.semtypes[t];
        }
        if (rd.word_ids) {
          id += "::";
          for (std::size_t w = 0; w < rd.word_ids->size(); ++w) {
            if (w) id += ',';
            id += std::to_string((*rd.word_ids)[w]);
          }
        }
      }
      out += "<e id=\"" + escape(id, true) + "\">";
      for (const auto& seg : m.segments) {
        if (seg.word_id) {
          out += "<w id=\"" + std::to_string(*seg.word_id) + "\">" + escape(seg.text, false) + "</w>";
        } else {
          out += escape(seg.text, false);
        }
      }
      out += "</e>";
    }
    emit_sentence_end();
    out += '\n';
  }
  return out;
}

}  // namespace semcube::iexml
