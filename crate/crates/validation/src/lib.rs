//! Holds the `acceptance` test target; it runs after every other suite in the workspace.
