#include "dcgen/corpus.hpp"

namespace dcgen {

const std::vector<std::string>& default_stopwords() {
  // Common English function words plus the clitic pieces the tokenizer
  // produces and ordinary punctuation marks.
  static const std::vector<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
      "any", "are", "aren", "as", "at", "be", "because", "been", "before", "being",
      "below", "between", "both", "but", "by", "came", "can", "cannot", "come",
      "could", "couldn", "did", "didn", "do", "does", "doesn", "doing", "don",
      "down", "during", "each", "else", "ever", "every", "few", "for", "from",
      "further", "get", "got", "had", "hadn", "has", "hasn", "have", "haven",
      "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
      "how", "i", "if", "in", "into", "is", "isn", "it", "its", "itself", "just",
      "let", "like", "me", "might", "mightn", "more", "most", "must", "mustn",
      "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only",
      "or", "other", "ought", "our", "ours", "ourselves", "out", "over", "own",
      "same", "shall", "shan", "she", "should", "shouldn", "so", "some", "such",
      "than", "that", "the", "their", "theirs", "them", "themselves", "then",
      "there", "these", "they", "this", "those", "through", "to", "too", "under",
      "until", "up", "upon", "us", "very", "was", "wasn", "we", "well", "were",
      "weren", "what", "when", "where", "which", "while", "who", "whom", "why",
      "will", "with", "won", "would", "wouldn", "yes", "yet", "you", "your",
      "yours", "yourself", "yourselves",
      // clitics produced by the tokenizer
      "'s", "'t", "'re", "'ve", "'ll", "'d", "'m", "'em",
      // punctuation
      ".", ",", "!", "?", ";", ":", "'", "\"", "(", ")", "[", "]", "{", "}",
      "-", "--", "...", "/", "\\", "*", "&", "%", "$", "#", "@", "+", "=", "<", ">",
      "<unk>", "<s>", "</s>", "<null>"};
  return words;
}

}  // namespace dcgen
