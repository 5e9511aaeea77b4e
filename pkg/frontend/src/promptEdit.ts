/** Token-level prompt edits driven by the chip menu.
 *
 * Chips are indexed by the server tokenizer (punctuation marks are their
 * own tokens), so edits must operate on the token-text list, never on a
 * whitespace split of the raw prompt. Joining token texts with single
 * spaces retokenizes to the same sequence, so the rebuilt prompt is
 * canonical.
 */

export function deleteToken(tokenTexts: string[], token: number): string {
  const texts = tokenTexts.filter((_, index) => index !== token);
  return texts.join(' ');
}

export function replaceToken(
  tokenTexts: string[],
  token: number,
  phrase: string,
): string {
  const texts = [...tokenTexts];
  if (token >= 0 && token < texts.length) {
    texts[token] = phrase;
  }
  return texts.join(' ');
}

export function appendPhrase(prompt: string, phrase: string): string {
  return prompt.trim() === '' ? phrase : `${prompt}, ${phrase}`;
}
