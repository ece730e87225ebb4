#include <cctype>
#include <fstream>

#include "revfraud/attacksim/attacksim.hpp"
#include "revfraud/errors.hpp"

namespace revfraud::attacksim {

namespace {

bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?' || c == ';' || c == '\n'; }

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u);
}

std::string normalize_word(const std::string& raw) {
  std::string out;
  for (char c : raw) {
    if (c == '\'') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<std::vector<std::string>> preprocess_sentences(const std::string& text, const StopwordSet& stopwords) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> sentence;
  std::string word;

  auto flush_word = [&] {
    if (word.empty()) return;
    if (!stopwords.count(word)) sentence.push_back(word);
    word.clear();
  };
  auto flush_sentence = [&] {
    flush_word();
    if (!sentence.empty()) sentences.push_back(std::move(sentence));
    sentence.clear();
  };

  for (char c : text) {
    if (is_word_byte(c)) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (c == '\'') {
      continue;
    } else if (is_sentence_end(c)) {
      flush_sentence();
    } else {
      flush_word();
    }
  }
  flush_sentence();
  return sentences;
}

std::vector<std::string> preprocess(const std::string& text, const StopwordSet& stopwords) {
  std::vector<std::string> out;
  for (auto& sentence : preprocess_sentences(text, stopwords)) {
    for (auto& w : sentence) out.push_back(std::move(w));
  }
  return out;
}

StopwordSet parse_stopwords(std::istream& in) {
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.insert(normalize_word(line));
  }
  return out;
}

StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stopword list '" + path + "'");
  return parse_stopwords(in);
}

Lexicon Lexicon::parse(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) throw FormatError("lexicon line needs exactly three TAB-separated fields", line_start);
    const std::string word = normalize_word(fields[0]);
    if (word.empty()) throw FormatError("lexicon entry with empty word", line_start);
    auto collect = [&](const std::string& segment, bool synonyms) {
      std::vector<std::string> words;
      if (segment.empty()) return words;
      for (const auto& w : split(segment, '|')) {
        const std::string norm = normalize_word(w);
        if (norm.empty()) continue;
        if (synonyms && norm == word) throw FormatError("'" + word + "' listed as its own synonym", line_start);
        words.push_back(norm);
      }
      return words;
    };
    auto syn = collect(fields[1], true);
    auto ant = collect(fields[2], false);
    if (!syn.empty()) lex.synonyms[word] = std::move(syn);
    if (!ant.empty()) lex.antonyms[word] = std::move(ant);
  }
  return lex;
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon '" + path + "'");
  return parse(in);
}

}  // namespace revfraud::attacksim
