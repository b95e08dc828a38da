// papaparse ships without type declarations; cover the subset used here
declare module "papaparse" {
  export interface ParseMeta {
    fields?: string[];
  }
  export interface ParseResult<T> {
    data: T[];
    errors: unknown[];
    meta: ParseMeta;
  }
  export interface ParseConfig {
    header?: boolean;
    skipEmptyLines?: boolean;
  }
  const Papa: {
    parse<T>(input: string, config?: ParseConfig): ParseResult<T>;
  };
  export default Papa;
}
