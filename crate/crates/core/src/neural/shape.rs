/// Orthographic shape: uppercase → `X`, lowercase → `x`, digits → `d`,
/// anything else kept; runs of one symbol are cut at 4.
pub fn shape_of(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = None;
    let mut run = 0;
    for c in text.chars() {
        let sym = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else {
            c
        };
        if Some(sym) == last {
            run += 1;
        } else {
            last = Some(sym);
            run = 1;
        }
        if run <= 4 {
            out.push(sym);
        }
    }
    out
}
