/** JSON text helpers: raw number tokens in, canonical pipeline bytes out. */

/** A number kept as its exact source token. */
export class RawNumber {
  constructor(readonly token: string) {}
}

export type RawValue =
  | string
  | boolean
  | null
  | RawNumber
  | RawValue[]
  | { [key: string]: RawValue };

const NUMBER_TOKEN = /-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?/y;
const WHITESPACE = " \t\n\r";

/** Parse JSON keeping every number as its exact source token. */
export function parseRawNumbers(text: string): RawValue {
  // JSON.parse would collapse 0.0 to the double 0 and re-render it as "0";
  // keeping the token string is what makes display equal the wire bytes.
  let pos = 0;

  const fail = (message: string): never => {
    throw new Error(`invalid JSON at offset ${pos}: ${message}`);
  };

  const skipWs = (): void => {
    while (pos < text.length && WHITESPACE.includes(text[pos] as string)) {
      pos += 1;
    }
  };

  const parseString = (): string => {
    const start = pos;
    pos += 1;
    while (pos < text.length) {
      const ch = text[pos];
      if (ch === "\\") {
        pos += 2;
        continue;
      }
      pos += 1;
      if (ch === '"') {
        return JSON.parse(text.slice(start, pos)) as string;
      }
    }
    return fail("unterminated string");
  };

  const parseNumber = (): RawNumber => {
    NUMBER_TOKEN.lastIndex = pos;
    const match = NUMBER_TOKEN.exec(text);
    if (match === null || match.index !== pos) {
      return fail("expected a value");
    }
    pos += match[0].length;
    return new RawNumber(match[0]);
  };

  const parseWord = (word: string, value: RawValue): RawValue => {
    if (text.slice(pos, pos + word.length) !== word) {
      return fail(`expected ${word}`);
    }
    pos += word.length;
    return value;
  };

  const parseArray = (): RawValue[] => {
    pos += 1;
    const items: RawValue[] = [];
    skipWs();
    if (text[pos] === "]") {
      pos += 1;
      return items;
    }
    for (;;) {
      items.push(parseValue());
      skipWs();
      const ch = text[pos];
      pos += 1;
      if (ch === "]") {
        return items;
      }
      if (ch !== ",") {
        return fail("expected , or ] in array");
      }
    }
  };

  const parseObject = (): { [key: string]: RawValue } => {
    pos += 1;
    const out: { [key: string]: RawValue } = {};
    skipWs();
    if (text[pos] === "}") {
      pos += 1;
      return out;
    }
    for (;;) {
      skipWs();
      if (text[pos] !== '"') {
        return fail("expected a key string");
      }
      const key = parseString();
      skipWs();
      if (text[pos] !== ":") {
        return fail("expected : after key");
      }
      pos += 1;
      out[key] = parseValue();
      skipWs();
      const ch = text[pos];
      pos += 1;
      if (ch === "}") {
        return out;
      }
      if (ch !== ",") {
        return fail("expected , or } in object");
      }
    }
  };

  const parseValue = (): RawValue => {
    skipWs();
    const ch = text[pos];
    if (ch === "{") return parseObject();
    if (ch === "[") return parseArray();
    if (ch === '"') return parseString();
    if (ch === "t") return parseWord("true", true);
    if (ch === "f") return parseWord("false", false);
    if (ch === "n") return parseWord("null", null);
    return parseNumber();
  };

  const value = parseValue();
  skipWs();
  if (pos !== text.length) {
    return fail("trailing characters");
  }
  return value;
}

/** Pretty, key-sorted JSON with a trailing newline; diffable and stable. */
export function canonicalJson(value: unknown): string {
  return writeValue(value, 0) + "\n";
}

function writeValue(value: unknown, depth: number): string {
  if (value instanceof RawNumber) {
    // The server already serialized the number; its token is the truth.
    return value.token;
  }
  if (
    value === null ||
    typeof value === "boolean" ||
    typeof value === "number" ||
    typeof value === "string"
  ) {
    return JSON.stringify(value);
  }
  const inner = "  ".repeat(depth + 1);
  const outer = "  ".repeat(depth);
  if (Array.isArray(value)) {
    if (value.length === 0) {
      return "[]";
    }
    const items = value.map((item) => inner + writeValue(item, depth + 1));
    return "[\n" + items.join(",\n") + "\n" + outer + "]";
  }
  if (typeof value !== "object") {
    throw new Error(`cannot serialize a ${typeof value}`);
  }
  const entries = Object.entries(value as Record<string, unknown>);
  if (entries.length === 0) {
    return "{}";
  }
  entries.sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
  const items = entries.map(
    ([key, item]) =>
      inner + JSON.stringify(key) + ": " + writeValue(item, depth + 1),
  );
  return "{\n" + items.join(",\n") + "\n" + outer + "}";
}
