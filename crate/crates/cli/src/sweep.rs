use anyhow::{bail, Context, Result};

/// Parses `a:b:step`, `a:b:*factor` or a comma list into a strictly
/// increasing list of qubit counts.
pub fn parse_sweep(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            bail!("sweep `{text}` must look like a:b:step or a:b:*factor");
        }
        let a: usize = parts[0].trim().parse().with_context(|| format!("bad sweep start in `{text}`"))?;
        let b: usize = parts[1].trim().parse().with_context(|| format!("bad sweep end in `{text}`"))?;
        if a == 0 || b < a {
            bail!("sweep `{text}` needs 0 < start <= end");
        }
        let step = parts[2].trim();
        let mut out = Vec::new();
        if let Some(factor) = step.strip_prefix('*') {
            let f: f64 = factor.trim().parse().with_context(|| format!("bad sweep factor in `{text}`"))?;
            if f.is_nan() || f <= 1.0 {
                bail!("sweep factor must exceed 1, got {f}");
            }
            let mut x = a as f64;
            while x.round() as usize <= b {
                out.push(x.round() as usize);
                x *= f;
            }
        } else {
            let s: usize = step.parse().with_context(|| format!("bad sweep step in `{text}`"))?;
            if s == 0 {
                bail!("sweep step must be positive");
            }
            out.extend((a..=b).step_by(s));
        }
        out
    } else {
        text.split(',')
            .map(|v| v.trim().parse::<usize>().with_context(|| format!("bad sweep entry `{v}`")))
            .collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        bail!("sweep `{text}` is empty");
    }
    if values.contains(&0) {
        bail!("sweep values must be positive");
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        bail!("sweep `{text}` is not strictly increasing: {values:?}");
    }
    Ok(values)
}
