//! The three epidemic scenarios as model text plus numeric settings.

pub const SEIR: &str = "\
# SEIR, infectious compartment measured
states: S, E, I, R
params: beta, epsilon, gamma
dynamics:
  d/dt S = -beta*S*I
  d/dt E = beta*S*I - epsilon*E
  d/dt I = epsilon*E - gamma*I
  d/dt R = gamma*I
measure:
  y1 = I
reduce:
  R = 1 - S - E - I
";

pub const SICRD: &str = "\
# SICRD, infectious compartment measured
states: S, I, C, R, D
params: beta, p, q, r, mu
dynamics:
  d/dt S = -beta*S*I - q*S + p*C
  d/dt I = beta*S*I - (r + mu)*I
  d/dt C = q*S - p*C
  d/dt R = r*I
  d/dt D = mu*I
measure:
  y1 = I
reduce:
  D = 1 - S - I - C - R
";

pub const SAIRD: &str = "\
# SAIRD with time-varying contact input u = exp(-k t); I and R measured
states: S, A, I, R, D
params: beta, xi, kappa, gamma, delta
inputs: u
dynamics:
  d/dt S = -beta*u*S*I - xi*u*S*A
  d/dt A = beta*u*S*I + xi*u*S*A - kappa*A
  d/dt I = kappa*A - (gamma + delta)*I
  d/dt R = gamma*I
  d/dt D = delta*I
measure:
  y1 = I
  y2 = R
reduce:
  D = 1 - S - A - I - R
";
