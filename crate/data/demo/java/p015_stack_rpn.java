import java.util.ArrayDeque;
import java.util.Deque;
import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        Deque<Long> stack = new ArrayDeque<>();
        while (sc.hasNext()) {
            String tok = sc.next();
            if (tok.equals("+") || tok.equals("-") || tok.equals("*")) {
                long rhs = stack.pop();
                long lhs = stack.pop();
                char op = tok.charAt(0);
                long res;
                switch (op) {
                    case '+':
                        res = lhs + rhs;
                        break;
                    case '-':
                        res = lhs - rhs;
                        break;
                    default:
                        res = lhs * rhs;
                        break;
                }
                stack.push(res);
            } else {
                stack.push(Long.parseLong(tok));
            }
        }
        System.out.println(stack.pop());
    }
}
