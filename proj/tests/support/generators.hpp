#pragma once

// Seeded generators for property and acceptance tests.

#include <algorithm>
#include <cctype>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "medharness/text.hpp"
#include "medharness/types.hpp"
#include "oracles.hpp"

namespace gen {

using medharness::Option;

inline std::u32string random_mixed(std::mt19937_64& rng, std::size_t max_len = 30) {
  static const std::u32string kPools[] = {
      U"胃肠炎心肝肾病症状血",  // CJK
      U"abcAB",
      U"，。.,！?、",
      U" 12Ａ",
  };
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> pool(0, 9);
  std::u32string s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const int p = pool(rng);
    const auto& chars = kPools[p < 4 ? 0 : p < 7 ? 1 : p < 9 ? 2 : 3];
    s.push_back(chars[std::uniform_int_distribution<std::size_t>(0, chars.size() - 1)(rng)]);
  }
  return s;
}

/// Random insert/delete/substitute edits of `s`, clipped to max_len.
inline std::u32string mutate(std::mt19937_64& rng, std::u32string s, std::size_t max_len = 30) {
  const std::u32string alphabet = U"胃肠炎心aAb，. 1";
  std::uniform_int_distribution<int> edits(0, 4);
  for (int e = edits(rng); e > 0; --e) {
    const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
    const char32_t c =
        alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    const std::size_t at = std::uniform_int_distribution<std::size_t>(0, s.size())(rng);
    if (kind == 0 && s.size() < max_len) s.insert(s.begin() + static_cast<std::ptrdiff_t>(at), c);
    else if (kind == 1 && at < s.size()) s.erase(at, 1);
    else if (at < s.size()) s[at] = c;
  }
  return s;
}

inline const std::vector<std::string>& zh_terms() {
  static const std::vector<std::string> v{
      "十二指肠溃疡", "急性胰腺炎", "慢性胃炎", "胆囊结石", "肝硬化",
      "缺铁性贫血", "巨幼细胞贫血", "再生障碍性贫血", "甲状腺功能亢进症", "原发性高血压",
      "支气管哮喘", "慢性阻塞性肺疾病", "肺炎链球菌肺炎", "急性肾小球肾炎", "糖尿病酮症酸中毒",
      "系统性红斑狼疮", "类风湿关节炎", "急性心肌梗死", "病毒性心肌炎", "细菌性痢疾"};
  return v;
}

inline const std::vector<std::string>& en_terms() {
  static const std::vector<std::string> v{
      "Escherichia coli", "Staphylococcus aureus", "Protamine sulfate", "Phrenic nerve",
      "Sinoatrial node", "Pulmonary embolism", "Acute pancreatitis", "Iron deficiency anemia",
      "Hypothyroidism", "Nephrotic syndrome", "Myocardial infarction", "Ulcerative colitis",
      "Appendicitis", "Cholecystitis", "Pneumothorax", "Meningitis", "Osteoporosis",
      "Rheumatoid arthritis", "Tuberculosis", "Hepatitis"};
  return v;
}

inline std::string ascii_lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool contains_ci(const std::string& hay, const std::string& needle) {
  return ascii_lower(hay).find(ascii_lower(needle)) != std::string::npos;
}

/// 4 or 5 options from one pool, none a substring of another.
inline std::vector<Option> random_options(std::mt19937_64& rng, bool english) {
  const auto& pool = english ? en_terms() : zh_terms();
  const std::size_t n = std::uniform_int_distribution<int>(0, 1)(rng) ? 5 : 4;
  while (true) {
    std::vector<std::string> picked;
    std::sample(pool.begin(), pool.end(), std::back_inserter(picked), n, rng);
    std::shuffle(picked.begin(), picked.end(), rng);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = 0; j < n && ok; ++j) {
        if (i != j && contains_ci(picked[i], picked[j])) ok = false;
      }
    }
    if (!ok) continue;
    std::vector<Option> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<char>('A' + i), picked[i]});
    return out;
  }
}

inline std::string letters_of(const std::set<char>& s) { return {s.begin(), s.end()}; }

struct ExtractionCase {
  std::string category;
  std::string raw;
  std::vector<Option> options;
  /// Unset for near-miss prose, where only totality is checked.
  std::optional<std::set<char>> labels;
  std::optional<medharness::Tier> tier;
};

inline bool has_single_letter_token(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isalpha(static_cast<unsigned char>(s[i]))) continue;
    const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1]));
    const bool right = i + 1 == s.size() || !std::isalnum(static_cast<unsigned char>(s[i + 1]));
    if (left && right) return true;
  }
  return false;
}

inline bool mentions_cue(const std::string& s) {
  return s.find("答案") != std::string::npos || s.find("正确选项") != std::string::npos ||
         contains_ci(s, "answer");
}

inline std::vector<ExtractionCase> extraction_suite(std::uint64_t seed, int per_category = 90) {
  using medharness::Tier;
  std::mt19937_64 rng(seed);
  std::vector<ExtractionCase> out;
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto coin = [&]() { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; };
  auto letter = [&](const std::vector<Option>& o) { return o[pick(o.size())].label; };

  for (int i = 0; i < per_category; ++i) {  // bare letters
    const auto options = random_options(rng, coin());
    const char l = letter(options);
    const std::string L(1, l);
    const std::string lower(1, static_cast<char>(std::tolower(l)));
    const std::string fullwidth = medharness::text::encode(std::u32string(1, 0xFF21 + (l - 'A')));
    const std::vector<std::string> forms{L, L + ".", L + "。", "  " + L + "  ", "(" + L + ")",
                                         L + "）", lower, fullwidth, L + ". " + options[l - 'A'].text,
                                         L + "\n解析：略"};
    out.push_back({"bare", forms[pick(forms.size())], options, std::set<char>{l}, Tier::lone_label});
  }

  for (int i = 0; i < per_category; ++i) {  // lone letter inside prose
    const auto options = random_options(rng, coin());
    const char l = letter(options);
    const std::string L(1, l);
    const std::vector<std::string> forms{"我选" + L, "I would pick " + L + " here",
                                         "应该选" + L + "吧", "Option " + L + " looks right"};
    out.push_back({"embedded", forms[pick(forms.size())], options, std::set<char>{l}, Tier::lone_label});
  }

  for (int i = 0; i < per_category; ++i) {  // zh cue
    const auto options = random_options(rng, false);
    const char l = letter(options);
    const std::string L(1, l);
    const std::vector<std::string> forms{"答案：" + L, "答案是" + L, "正确选项：" + L,
                                         "根据题干分析，答案：" + L,
                                         "答案：" + L + "。" + options[l - 'A'].text,
                                         "本题考查消化系统。\n答案：" + L};
    out.push_back({"cue_zh", forms[pick(forms.size())], options, std::set<char>{l}, Tier::cue});
  }

  for (int i = 0; i < per_category; ++i) {  // en cue
    const auto options = random_options(rng, true);
    const char l = letter(options);
    const std::string L(1, l);
    const std::string lower(1, static_cast<char>(std::tolower(l)));
    const std::vector<std::string> forms{"Answer: " + L, "The answer is " + L + ".",
                                         "answer: (" + L + ")", "ANSWER - " + L,
                                         "The correct answer is " + lower};
    out.push_back({"cue_en", forms[pick(forms.size())], options, std::set<char>{l}, Tier::cue});
  }

  for (int i = 0; i < per_category; ++i) {  // multi-label cue
    const auto options = random_options(rng, coin());
    std::set<char> labels;
    while (labels.size() < 2) labels.insert(letter(options));
    if (coin()) labels.insert(letter(options));
    const std::string joined = letters_of(labels);
    auto join_with = [&](const std::string& sep) {
      std::string s;
      for (char c : labels) s += (s.empty() ? "" : sep) + std::string(1, c);
      return s;
    };
    const std::vector<std::string> forms{"答案：" + joined, "答案：" + join_with("、"),
                                         "Answer: " + join_with(", "), "答案：" + join_with(" "),
                                         "正确选项：" + join_with(",")};
    out.push_back({"cue_multi", forms[pick(forms.size())], options, labels, Tier::cue});
  }

  for (int i = 0; i < per_category; ++i) {  // echoed option text
    const bool english = coin();
    const auto options = random_options(rng, english);
    const char l = letter(options);
    const std::string& t = options[l - 'A'].text;
    const std::vector<std::string> forms =
        english ? std::vector<std::string>{t, "It is most likely " + t + ".", "Probably " + t}
                : std::vector<std::string>{t, "我认为是" + t, "应选" + t + "。",
                                           "最可能的诊断是" + t + "，因为症状典型"};
    const std::string raw = forms[pick(forms.size())];
    bool clean = !mentions_cue(raw) && !has_single_letter_token(raw);
    for (const auto& o : options) {
      if (o.label != l && contains_ci(raw, o.text)) clean = false;
    }
    if (!clean) {
      --i;
      continue;
    }
    out.push_back({"option_text", raw, options, std::set<char>{l}, Tier::option_text});
  }

  for (int i = 0; i < per_category; ++i) {  // misspelled option text on the first line
    const bool english = coin();
    const auto options = random_options(rng, english);
    const char l = letter(options);
    std::u32string t = medharness::text::decode(options[l - 'A'].text);
    if (t.size() < 5) {
      --i;
      continue;
    }
    const std::size_t at = 1 + pick(t.size() - 2);
    if (coin()) t.erase(at, 1);
    else t.insert(t.begin() + static_cast<std::ptrdiff_t>(at), english ? U'q' : U'某');
    const std::string first = medharness::text::encode(t);
    const std::string raw = coin() ? first : first + "\n以上仅供参考";
    bool clean = !mentions_cue(raw) && !has_single_letter_token(raw);
    std::size_t best = SIZE_MAX, best_count = 0;
    char best_label = 0;
    for (const auto& o : options) {
      if (contains_ci(raw, o.text)) clean = false;
      const std::u32string bare = medharness::text::decode(o.text);
      const std::u32string echoed = std::u32string(1, o.label) + U". " + bare;
      const std::size_t d = std::min(oracle::levenshtein(t, bare), oracle::levenshtein(t, echoed));
      if (d < best) {
        best = d;
        best_count = 1;
        best_label = o.label;
      } else if (d == best) {
        ++best_count;
      }
    }
    if (!clean || best_count != 1 || best_label != l) {
      --i;
      continue;
    }
    out.push_back({"near_text", raw, options, std::set<char>{l}, Tier::levenshtein});
  }

  for (int i = 0; i < per_category; ++i) {  // prose with no designed answer
    const auto options = random_options(rng, coin());
    const std::vector<std::string> forms{"我不确定这道题", "", "   ", "None of the above",
                                         "all of them", "a", "以上都不对", "Answer:", "答案：无",
                                         "e.g. see below"};
    std::string raw = coin() ? forms[pick(forms.size())]
                             : medharness::text::encode(random_mixed(rng));
    out.push_back({"prose", raw, options, std::nullopt, std::nullopt});
  }
  return out;
}

struct HardCase {
  std::string raw;
  std::optional<std::set<char>> lenient;  // expected labels, nullopt = no match
  std::optional<std::set<char>> strict;
};

inline std::vector<Option> abcde() {
  return {{'A', "甲"}, {'B', "乙"}, {'C', "丙"}, {'D', "丁"}, {'E', "戊"}};
}

inline std::vector<HardCase> hard_suite(std::uint64_t seed, int per_form = 12) {
  std::mt19937_64 rng(seed);
  std::vector<HardCase> out;
  auto some_labels = [&](std::size_t min) {
    std::set<char> s;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(min, 3)(rng);
    while (s.size() < n) s.insert(static_cast<char>('A' + std::uniform_int_distribution<int>(0, 4)(rng)));
    return s;
  };
  auto join = [](const std::set<char>& s, const std::string& sep) {
    std::string r;
    for (char c : s) r += (r.empty() ? "" : sep) + std::string(1, c);
    return r;
  };
  for (int i = 0; i < per_form; ++i) {
    const auto s = some_labels(1);
    const auto m = some_labels(2);
    const std::string L(1, *s.begin());
    const std::string lower(1, static_cast<char>(std::tolower(*s.begin())));
    const std::string fw = medharness::text::encode(std::u32string(1, 0xFF21 + (*s.begin() - 'A')));
    // accepted in both modes
    out.push_back({join(s, ""), s, s});
    out.push_back({join(m, ","), m, m});
    out.push_back({join(m, "、"), m, m});
    out.push_back({join(m, " "), m, m});
    out.push_back({join(m, "，"), m, m});
    out.push_back({"  " + join(s, "") + "\n", s, s});
    out.push_back({fw, std::set<char>{*s.begin()}, std::set<char>{*s.begin()}});
    // accepted only without strict
    out.push_back({L + ".", std::set<char>{*s.begin()}, std::nullopt});
    out.push_back({L + "。", std::set<char>{*s.begin()}, std::nullopt});
    out.push_back({L + "。因为症状典型", std::set<char>{*s.begin()}, std::nullopt});
    out.push_back({join(m, "") + "\n解析：略", m, std::nullopt});
    out.push_back({L + "：甲状腺", std::set<char>{*s.begin()}, std::nullopt});
    // prose-prefixed or otherwise outside the grammar
    for (const std::string& raw :
         {"答案是" + L, "The answer is " + L, "我选" + L, "Answer: " + L, "选项" + L, lower,
          "(" + L + ")", L + " patient has fever", std::string("Because of the rash"), L + "x",
          std::string(""), std::string("无法确定")}) {
      out.push_back({raw, std::nullopt, std::nullopt});
    }
  }
  return out;
}

}  // namespace gen
