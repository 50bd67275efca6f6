//! Local maxima with topographic prominence.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub value: f64,
    pub prominence: f64,
}

/// Interior local maxima. A plateau counts once, at its first sample.
pub fn find_peaks(profile: &[f64]) -> Vec<Peak> {
    let n = profile.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if profile[i] > profile[i - 1] {
            let mut j = i;
            while j + 1 < n && profile[j + 1] == profile[i] {
                j += 1;
            }
            if j + 1 < n && profile[j + 1] < profile[i] {
                out.push(Peak { index: i, value: profile[i], prominence: prominence(profile, i) });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn prominence(profile: &[f64], i: usize) -> f64 {
    let v = profile[i];
    let mut left = v;
    for &x in profile[..i].iter().rev() {
        if x > v {
            break;
        }
        left = left.min(x);
    }
    let mut right = v;
    for &x in &profile[i + 1..] {
        if x > v {
            break;
        }
        right = right.min(x);
    }
    v - left.max(right)
}

/// Peaks whose prominence is at least `fraction` of the profile maximum.
pub fn prominent_peaks(profile: &[f64], fraction: f64) -> Vec<Peak> {
    let max = profile.iter().copied().fold(0.0, f64::max);
    find_peaks(profile).into_iter().filter(|p| p.prominence >= fraction * max).collect()
}

pub fn count_peaks(profile: &[f64], fraction: f64) -> usize {
    prominent_peaks(profile, fraction).len()
}
